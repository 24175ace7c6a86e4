import pytest
from hypothesis import given, settings, strategies as st

from planewave import RunConfig, emit_config, parse_config
from planewave.config import COMMANDS, with_overrides
from planewave.errors import ConfigError

FISHER = "reaction.family=power\nreaction.A=1\nreaction.m=1\nreaction.k=1\ndiffusivity=1\ncommand=solve"


def test_fisher_solve_config():
    cfg = parse_config(FISHER)
    assert (cfg.A, cfg.m, cfg.k, cfg.D, cfg.command) == (1.0, 1, 1, 1.0, "solve")
    assert cfg.lam is None and cfg.format is None and cfg.output_dir == "."


def test_lambda_required():
    with pytest.raises(ConfigError, match="lambda required for orbit"):
        parse_config("command=orbit")


def test_diffusivity_must_be_positive():
    with pytest.raises(ConfigError, match="D must be positive"):
        parse_config("diffusivity=-1")


def test_comments_quotes_and_whitespace():
    text = '# header\nreaction.family = "power"  # inline\n\nreaction.A = 0.5\nreaction.m = 2\n' \
           'reaction.k = 2\ndiffusivity = 2\ncommand = verify\nlambda = 0.1\noutput_dir = "out dir"\n'
    cfg = parse_config(text)
    assert cfg.lam == 0.1 and cfg.output_dir == "out dir"


def test_unknown_key_has_line_number():
    with pytest.raises(ConfigError) as exc:
        parse_config(FISHER + "\nspeed=2")
    assert exc.value.line == 7 and "unknown key" in str(exc.value)


def test_type_mismatch_has_line_number():
    with pytest.raises(ConfigError) as exc:
        parse_config(FISHER.replace("reaction.m=1", "reaction.m=1.5"))
    assert exc.value.line == 3 and "integer" in str(exc.value)


def test_missing_key_reported():
    with pytest.raises(ConfigError, match="missing required key 'reaction.k'") as exc:
        parse_config(FISHER.replace("reaction.k=1\n", ""))
    assert exc.value.line is not None


def test_duplicate_key():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config(FISHER + "\ncommand=orbit")


def test_cutoff_needs_threshold():
    with pytest.raises(ConfigError, match="cutoff_X required for cutoff"):
        parse_config(FISHER.replace("solve", "cutoff"))


def test_tolerance_overrides():
    cfg = parse_config(FISHER + "\ntolerances.rel_tol = 1e-9\ntolerances.grid_n = 256")
    opts = cfg.options()
    assert opts.rel_tol == 1e-9 and opts.grid_n == 256


def test_bad_tolerance_override_is_config_error():
    with pytest.raises(ConfigError) as exc:
        parse_config(FISHER + "\ntolerances.grid_n = 7")
    assert exc.value.line == 7


@pytest.mark.parametrize("bad", ["reaction.k=0", "reaction.family=exp", "format=xml", "lambda=-2"])
def test_semantic_errors(bad):
    key = bad.split("=")[0]
    lines = [ln for ln in FISHER.splitlines() if not ln.startswith(key + "=")]
    with pytest.raises(ConfigError):
        parse_config("\n".join(lines + [bad]))


def test_overrides_revalidate():
    cfg = parse_config(FISHER)
    assert with_overrides(cfg, lam=0.1, command="orbit").command == "orbit"
    with pytest.raises(ConfigError, match="lambda required for profile"):
        with_overrides(cfg, command="profile")


finite = dict(allow_nan=False, allow_infinity=False)
configs = st.builds(
    RunConfig,
    A=st.floats(1e-3, 1e3, **finite), m=st.integers(1, 5), k=st.integers(1, 5),
    D=st.floats(1e-2, 1e2, **finite), command=st.sampled_from(COMMANDS),
    lam=st.floats(1e-6, 1e3, **finite), cutoff_X=st.floats(0.01, 0.99, **finite),
    anchor_x=st.floats(0.01, 0.99, **finite), epsilon=st.none() | st.floats(1e-8, 1e-2, **finite),
    depth=st.integers(1, 8), xi=st.booleans(), tol=st.none() | st.floats(1e-10, 1e-3, **finite),
    tolerances=st.sets(st.sampled_from([("rel_tol", 1e-9), ("abs_tol", 3e-13), ("grid_n", 256),
                                        ("reduced", True), ("max_steps", 5000)]),
                       max_size=3).map(lambda s: tuple(sorted(dict(s).items()))),
    output_dir=st.text(st.characters(whitelist_categories=("Ll", "Lu", "Nd")), min_size=1, max_size=12),
    format=st.sampled_from([None, "csv", "json"]),
)


@settings(max_examples=200, deadline=None)
@given(configs)
def test_round_trip(cfg):
    assert parse_config(emit_config(cfg)) == cfg
