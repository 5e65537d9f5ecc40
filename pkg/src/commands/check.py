from ..analysis import analyze_program
from ..helpers import EXIT_OK, EXIT_VIOLATIONS, envelope, failure, load_pkg, settings_of


def check_program(params):
    """Report analysis diagnostics; exit 1 if any rule is rejected"""
    try:
        pkg = load_pkg(params)
        settings = settings_of(params)
        report = analyze_program(pkg.program, settings.relax_aggregate_strata)
        program = pkg.program
        summary = (
            f"rules={len(program.rules)} soft={len(program.soft_rules)} "
            f"hard={len(program.hard_rules)} facts={len(pkg.database)} "
            f"warded={str(report.warded.warded).lower()} "
            f"stratified={str(report.stratification.stratified).lower()}"
        )
        lines = [d.as_line() for d in report.diagnostics + report.warnings]
        return envelope(
            "check",
            "pass" if report.ok else "fail",
            {
                "output": "".join(line + "\n" for line in lines + [summary]),
                "strata": report.stratification.strata,
                "affected": sorted(f"{p}[{i}]" for p, i in report.warded.affected),
            },
            None if report.ok else f"{len(report.diagnostics)} analysis violation(s)",
            EXIT_OK if report.ok else EXIT_VIOLATIONS,
        )
    except Exception as e:
        return failure("check", e)
