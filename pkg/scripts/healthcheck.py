import sys

from covconv.checks import run_check
from covconv.config import config, load_experiment
from covconv.display import display_suite
from covconv.safe_call import safe_call_for_suite


def run_config(path):
    cfg = load_experiment(path)
    if cfg.check is None:
        return None
    return run_check(cfg).to_dict()


def main():
    print("\n--- COVCONV HEALTHCHECK ---\n")

    paths = sorted(config.config_dir.glob("*.json"))
    if not paths:
        print(f"❌ No configs found in {config.config_dir}")
        sys.exit(1)

    print(f"🔎 Running {len(paths)} shipped configs...")

    entries = []
    for path in paths:
        desc, result = safe_call_for_suite(run_config, path, method_name="run_config", call_desc=path.stem)
        if result is not None:
            entries.append((desc, result))

    if not display_suite("shipped configs", entries):
        print("❌ Healthcheck failed")
        sys.exit(1)

    print("\n🎉 Healthcheck passed\n")


if __name__ == "__main__":
    main()
