import click
import logging
from reconsched import scenario_ui, solve_ui, report_ui
from reconsched import __version__

LOG_LEVELS = [logging.WARNING, logging.INFO, logging.DEBUG]

@click.group()
@click.version_option(__version__)
@click.option("--verbose", "-v", count=True, help="Log progress; repeat for more detail")
def cli(verbose):
    logging.basicConfig(level=LOG_LEVELS[min(verbose, len(LOG_LEVELS) - 1)],
        format="%(levelname)s %(name)s: %(message)s")

cli.add_command(scenario_ui.generate)
cli.add_command(scenario_ui.caseStudy)
cli.add_command(solve_ui.solve)
cli.add_command(solve_ui.validate)
cli.add_command(solve_ui.exportLp)
cli.add_command(report_ui.report)
cli.add_command(report_ui.experiment)


if __name__ == '__main__':
    cli()
