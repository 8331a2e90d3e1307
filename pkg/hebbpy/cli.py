#!/usr/bin/python
##
# @brief hebbpy command line.
#
# usage: hebbpy <command> [-c run.cfg] [--section.key value ...]
#   mpirun -np 4 hebbpy sweep -c sweep.cfg
#
# exit status: 0 pass, 1 runtime / configuration error, 2 verification failure
##
from __future__ import print_function, division
import sys
from mpi4py import MPI
from hebbpy.config import ConfigError, build_parser, config_from_args
from hebbpy.experiments import COMMANDS, EXIT_ERROR


def main(argv=None, comm=None):
    parser = build_parser(sorted(COMMANDS.keys()))
    args = parser.parse_args(argv)
    if comm is None:
        comm = MPI.COMM_WORLD
    try:
        config = config_from_args(args)
        return COMMANDS[args.command](config, comm=comm, verbose=args.verbose)
    except ConfigError as e:
        print(str(e), file=sys.stderr)
        return EXIT_ERROR
    except Exception as e:
        print("ERROR: %s failed: %s" % (args.command, str(e)), file=sys.stderr)
        if args.verbose > 1:
            raise
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
