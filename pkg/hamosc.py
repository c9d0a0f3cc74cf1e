# Standard libraries
import argparse
import logging
import os
import sys
from pathlib import Path

# Pypi libraries
from termcolor import colored, cprint

# Internal libraries
from src.coeffs.system import validateSystem
from src.criteria import CRITERION_KEYS, compareAll, runCriteria
from src.data.basicTypes import BOUNDED, DIVERGES, NOT_APPLICABLE, OSCILLATORY
from src.data.errors import ConfigError, DomainError, HamoscError, ParseError
from src.data.loadSystem import DEFAULT_SETTINGS_PATH, loadSettings, systemFromConfig
from src.data.logs import cLog
from src.integrate import detectDetZeros, findNearMisses, integrateSystem
from src.report import compareDocument, criteriaDocument, integrateDocument, validationDocument, writeJson, writeTrajectoryCsv

# Conditional imports based on OS
try: # Linux
    import readline
except Exception: # Windows
    import pyreadline3 as readline


EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_VALIDATION = 2
EXIT_PARSE = 3
EXIT_INTEGRATION = 4

VERDICT_COLORS = {
    OSCILLATORY: 'green',
    DIVERGES: 'green',
    BOUNDED: 'cyan',
    NOT_APPLICABLE: 'yellow',
}
PROJECT_SUFFIXES = ('.json', '.yaml')


class ValidationFailed(HamoscError):
    pass


class ProgramContext:
    PROJECTS_PATH = Path('projects')

    cLog = staticmethod(cLog)


    def __init__(self):
        logging.basicConfig(level=logging.INFO)

        self.settings = {}
        self.stage = 'load'


    def load_settings(self, settings_path):
        self.settings = loadSettings(settings_path)


    def resolve_project(self, project_name):
        path = Path(project_name)
        if path.exists() or path.is_absolute():
            return path
        return ProgramContext.PROJECTS_PATH / path


    def load_project(self, project_name):
        self.stage = 'load'
        config = systemFromConfig(str(self.resolve_project(project_name)), settings=self.settings)

        self.stage = 'validate'
        opts = config.opts
        report = validateSystem(config.spec, opts.validation_samples, opts.validation_span, opts.hermitian_tol)
        self.stage = 'run'
        return config, report


    def exit_code(self, e):
        if isinstance(e, (ConfigError, ParseError)):
            return EXIT_PARSE
        if isinstance(e, ValidationFailed):
            return EXIT_VALIDATION
        if isinstance(e, DomainError) and self.stage in {'load', 'validate'}:
            return EXIT_VALIDATION
        if isinstance(e, ValueError) and self.stage == 'load':
            return EXIT_PARSE
        if isinstance(e, HamoscError):
            return EXIT_INTEGRATION
        return EXIT_UNEXPECTED


    @staticmethod
    def print_validation(config, report):
        status = colored('ok', 'green') if report.ok else colored('FAILED', 'red')
        cprint(f'{config.path}: n={config.spec.n}, t0={config.spec.t0!r}, {report.samples} samples: ', end='')
        print(status)
        for failure in report.failures:
            cprint(f'  {failure}', 'red')
        if not report.positive_definite_b:
            cprint('  B(t) is not positive definite at every sample (eigen and reciprocal criteria will not apply)', 'yellow')


    @staticmethod
    def print_reports(reports):
        width = max(len(r.criterion) for r in reports)
        for r in reports:
            color = VERDICT_COLORS.get(r.verdict, 'white')
            cprint(f'{r.criterion:<{width}}  ', end='')
            cprint(f'{r.verdict:<22}', color, end='')
            print(f'  {r.reason}')
            for est in r.evidence:
                cprint(f'{"":<{width}}    {est.name}: {est.verdict}, final {est.final_value:.6g}', VERDICT_COLORS.get(est.verdict, 'white'))


    def validated(self, project_name):
        config, report = self.load_project(project_name)
        if not report.ok:
            self.print_validation(config, report)
            raise ValidationFailed(f'{config.path} failed validation')
        return config


    def cmd_validate(self, args):
        config, report = self.load_project(args.project)
        self.print_validation(config, report)
        if args.json:
            writeJson(validationDocument(config, report), args.json)
        return EXIT_OK if report.ok else EXIT_VALIDATION


    def cmd_integrate(self, args):
        config = self.validated(args.project)
        spec, opts = config.spec, config.opts
        T = args.T if args.T is not None else opts.horizonFor(spec.t0)
        if not T > spec.t0:
            raise ConfigError('--T', f'end time {T!r} must exceed t0 = {spec.t0!r}')
        zeta = args.zeta if args.zeta is not None else opts.zero_threshold

        traj = integrateSystem(spec, config.phi0, config.psi0, T, opts.integrator)
        zeros = detectDetZeros(traj, zeta)
        misses = findNearMisses(traj, zeta)

        cprint(f'{config.path}: {len(traj) - 1} steps on [{spec.t0!r}, {T!r}], {len(traj.rescale_log)} rescale event(s)', 'blue')
        cprint(f'max conjoined defect {traj.conjoined_defect.max():.3e}', 'yellow')
        cprint(f'{len(zeros)} zero(s) of det Phi', 'green' if zeros else 'white')
        for z in zeros:
            print(f'  t = {z.t_zero:.12g} ({z.kind}, ratio {z.sigma_ratio_min:.3e})')
        for t, value in misses:
            cprint(f'  near miss at t = {t:.12g} (ratio {value:.3e})', 'yellow')

        if args.csv:
            writeTrajectoryCsv(traj, args.csv)
        if args.json:
            writeJson(integrateDocument(config, traj, zeros, misses, T), args.json)
        return EXIT_OK


    def cmd_criteria(self, args):
        config = self.validated(args.project)
        keys = CRITERION_KEYS if args.criterion == 'all' else (args.criterion,)
        reports = runCriteria(config.spec, config.opts.criteria, keys)
        self.print_reports(reports)
        if args.json:
            writeJson(criteriaDocument(config, reports), args.json)
        return EXIT_OK


    def cmd_compare(self, args):
        config = self.validated(args.project)
        report = compareAll(config.spec, config.opts, config.phi0, config.psi0)
        self.print_reports(report.reports)
        cprint(f'{len(report.zeros)} zero(s) of det Phi on [{config.spec.t0!r}, {report.horizon!r}]', 'blue')
        for note in report.notes:
            cprint(f'  {note}', 'red' if note.startswith('DISAGREEMENT') else 'yellow')
        if args.json:
            writeJson(compareDocument(config, report), args.json)
        return EXIT_OK


    def run_guarded(self, command, args):
        try:
            return command(args)
        except HamoscError as e:
            code = self.exit_code(e)
            self.cLog(str(e), 'red', logging.WARNING)
            return code
        except ValueError as e:
            code = self.exit_code(e)
            self.cLog(f'{type(e).__name__}: {e}', 'red', logging.WARNING)
            return code
        except Exception as e:
            self.cLog(f'Unexpected {type(e).__name__}: {e}', 'red', logging.WARNING)
            return EXIT_UNEXPECTED


    def run_interactive(self):
        # Set up autcompletion config
        projects_path = ProgramContext.PROJECTS_PATH
        readline.parse_and_bind('tab: complete')
        readline.set_completer_delims('')

        def completer(text, state):
            prefix = ''
            suffix = text
            if '/' in text:
                parts = text.split('/')
                prefix = '/'.join(parts[:-1])
                suffix = parts[-1]

            target_path = projects_path / prefix
            if not target_path.is_dir():
                return None
            valid_completions = sorted(x for x in os.listdir(target_path) if x.startswith(suffix))
            if state < len(valid_completions):
                completion = valid_completions[state]
                if prefix != '':
                    completion = ''.join([prefix, '/', completion])
                if not completion.endswith(PROJECT_SUFFIXES):
                    completion += '/'
                return completion
            return None

        readline.set_completer(completer)

        while True:
            cprint('Please enter project path (example: "skew_rotation.json", tab autocomplete allowed, empty to quit)', 'blue')
            try:
                project_name = input(colored('> ', 'green')).strip()
            except EOFError:
                return EXIT_OK
            if not project_name:
                return EXIT_OK
            if not project_name.endswith(PROJECT_SUFFIXES):
                # "skew_rotation" means "skew_rotation.json"
                project_name += '.json'

            self.run_guarded(self.cmd_compare, argparse.Namespace(project=project_name, json=None))


    @staticmethod
    def build_parser():
        parser = argparse.ArgumentParser(prog='hamosc', description='Oscillation criteria for linear Hamiltonian systems.')
        parser.add_argument('--settings', type=str, default=str(DEFAULT_SETTINGS_PATH), help='Path to the global .yaml settings file.')
        parser.add_argument('--verbose', action='store_true', help='Log debug output.')
        parser.add_argument('--interactive', action='store_true', help='Force interactive mode.')
        sub = parser.add_subparsers(dest='command')

        p = sub.add_parser('validate', help='Check the coefficient invariants of a system.')
        p.add_argument('project', type=str, help='Path to a system config (.json), absolute or under projects/.')
        p.add_argument('--json', type=str, default=None, help='Write the validation report to this file.')

        p = sub.add_parser('integrate', help='Integrate the system and locate zeros of det Phi.')
        p.add_argument('project', type=str)
        p.add_argument('--T', type=float, default=None, help='End time (defaults to integrator.T, or t0 + HORIZON_SPAN).')
        p.add_argument('--zeta', type=float, default=None, help='Zero detection threshold (defaults to ZERO_THRESHOLD).')
        p.add_argument('--csv', type=str, default=None, help='Write one row per accepted step to this file.')
        p.add_argument('--json', type=str, default=None, help='Write the integration summary to this file.')

        p = sub.add_parser('criteria', help='Evaluate the oscillation criteria.')
        p.add_argument('project', type=str)
        p.add_argument('--criterion', choices=('all',) + CRITERION_KEYS, default='all')
        p.add_argument('--json', type=str, default=None, help='Write the criterion reports to this file.')

        p = sub.add_parser('compare', help='Evaluate every criterion and cross-check against integrated zeros.')
        p.add_argument('project', type=str)
        p.add_argument('--json', type=str, default=None, help='Write the comparison report to this file.')
        return parser


    def run(self, argv=None):
        parser = self.build_parser()
        args = parser.parse_args(argv)
        if args.verbose:
            logging.getLogger().setLevel(logging.DEBUG)

        try:
            self.load_settings(args.settings)
        except HamoscError as e:
            self.cLog(str(e), 'red', logging.WARNING)
            return EXIT_PARSE

        # Without a subcommand, fall back to the interactive prompt
        if args.command is None or args.interactive:
            if args.command is not None:
                parser.error('a subcommand cannot be combined with --interactive')
            return self.run_interactive()

        commands = {
            'validate': self.cmd_validate,
            'integrate': self.cmd_integrate,
            'criteria': self.cmd_criteria,
            'compare': self.cmd_compare,
        }
        return self.run_guarded(commands[args.command], args)


if __name__ == '__main__':
    sys.exit(ProgramContext().run())
