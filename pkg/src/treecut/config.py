"""Configuration for every tunable constant in the pipeline.

All the construction-side constants the analysis leaves implicit are pinned
here so certificates are reproducible and the verifier can report
measured-vs-declared values.
"""

from dataclasses import dataclass, field, fields
from fractions import Fraction

from .util import frac_str, parse_frac


@dataclass(frozen=True)
class Config:
    # Exact cut enumeration is used up to this many vertices; above it the
    # sparsest-cut backend falls back to spectral sweeps and certificates are
    # reported as sampled rather than exact.
    brute_threshold: int = 18

    # Oracle: peel while the sparsest-cut ratio is below
    # oracle_sparsity_c * phi * log2(n).
    oracle_sparsity_c: Fraction = Fraction(1)
    # Sink capacities for the per-step routing flows:
    # ceil(oracle_sink_scale * phi * log2(n) * mu(v)) into the peeled side
    # and the residual side.
    oracle_sink_scale: Fraction = Fraction(1)
    # Edge congestion cap for those routing flows; if a flow is infeasible at
    # this cap, the cap is doubled (up to oracle_congestion_limit) and the
    # achieved value is recorded on the outcome.
    oracle_congestion_cap: Fraction = Fraction(4)
    oracle_congestion_limit: Fraction = Fraction(64)

    # Balanced clustering: oracle called at phi = merge_phi_coeff / log2(n);
    # with the peeling balance guarantees this makes every accepted separator
    # at most 1/2-sparse, so each shrink multiplies the inter-cluster edge
    # capacity by at most (1 - merge_shrink_coeff / log2(n)).
    merge_phi_coeff: Fraction = Fraction(1, 6)
    merge_shrink_coeff: Fraction = Fraction(1, 8)
    merge_loop_slack: int = 16

    # Separator network: exact max-flow yields a 1-fair cut, well inside the
    # factor-2 guarantees the downstream accounting hard-asserts.
    fair_cut_alpha: Fraction = Fraction(2)

    # Basic mode boundary weight; None means 1/log2(n) (rational surrogate).
    tau_basic: Fraction | None = None

    # Refinement schedule.  c_phi is the largest coefficient compatible with
    # both sparsity requirements of the schedule (aggregate peel cuts are at
    # most 3*c_phi/f(S)-sparse and the three-way branch needs 1/(16 f(S))).
    c_phi: Fraction = Fraction(1, 48)
    # Declared routing constant c0; the verifier asserts measured <= declared.
    c0_declared: Fraction = Fraction(1)
    # Boundary all-to-all respect rate for refinement leaves: kappa/(f*log n).
    kappa: Fraction = Fraction(1, 384)
    # Per-cluster load cap asserted after the improved-mode uniformization and
    # boundary routing reset.
    alpha_improved_cap: Fraction = Fraction(8)

    # Load growth per merge replay: alpha' = alpha * (1 + replay_tau_c * tau).
    replay_tau_c: int = 6

    # Quality envelope constant: measured quality must satisfy
    # alpha <= quality_C * (log2 n)^2 * max(1, log2 log2 n).
    quality_C: Fraction = Fraction(16)

    # Sampled verification defaults.
    samples: int = 10000
    seed: int = 0

    def replace(self, **kw) -> "Config":
        vals = {f.name: getattr(self, f.name) for f in fields(self)}
        vals.update(kw)
        return Config(**vals)


def load_config(path: str) -> Config:
    """Read key=value lines ('#' comments); values parsed as rationals/ints."""
    kw = {}
    ftypes = {f.name: f for f in fields(Config)}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError("%s:%d: expected key=value" % (path, lineno))
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key not in ftypes:
                raise ValueError("%s:%d: unknown key %r" % (path, lineno, key))
            if key in ("brute_threshold", "merge_loop_slack", "replay_tau_c",
                       "samples", "seed"):
                kw[key] = int(val)
            elif key == "tau_basic":
                kw[key] = None if val.lower() == "none" else parse_frac(val)
            else:
                kw[key] = parse_frac(val)
    return Config(**kw)


def dump_config(cfg: Config) -> str:
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if v is None:
            lines.append("%s = none" % f.name)
        elif isinstance(v, Fraction):
            lines.append("%s = %s" % (f.name, frac_str(v)))
        else:
            lines.append("%s = %s" % (f.name, v))
    return "\n".join(lines) + "\n"


DEFAULT = Config()
