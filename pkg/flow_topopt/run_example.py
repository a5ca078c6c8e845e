from dotenv import load_dotenv

from flow_topopt.config import override_config
from flow_topopt.fem.cases import CaseName
from flow_topopt.optimizer import objective_report, run
from flow_topopt.presets import preset_config

load_dotenv()


def run_pipe_bend_example():
    """Quick pipe-bend optimization on a coarse grid without refinement."""

    config = override_config(preset_config(CaseName.PIPE_BEND, resolution=10, levels=0),
                             iterations={"outer": 20},
                             output={"directory": "pipe_bend_example", "plot": True})
    print(f"Starting {config.case.value} example with n={config.resolution}...")

    result = run(config)
    report = objective_report(result.phi, result.solution, result.duals, config.phase)

    print("\n" + "=" * 80)
    print(f"PIPE BEND, {len(result.history)} outer iterations")
    print("=" * 80)
    print(report.as_str)
    print(f"\nDissipated power: {report.dissipated:.4f}")
    print(f"Fluid fraction: {(report.volume_gap / result.mesh.area) + config.phase.beta:.4f} "
          f"(target {config.phase.beta})")

    for path in result.exports:
        print(f"Saved {path}")


if __name__ == "__main__":
    run_pipe_bend_example()
