import sys

from probec_cli import main

# banner goes to stderr; stdout carries CSV and fact output
print('Starting Prob-EC command line...', file=sys.stderr)
print('Subcommands: recognize, noise, filter, eval, sweep, validate, benchmark, occurrences', file=sys.stderr)
print('Use --help on any subcommand for its options', file=sys.stderr)

main()
