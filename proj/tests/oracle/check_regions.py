"""Recomputes every derived column of regions CSV files from the point
coordinates, normals and the domain given in the metadata lines.

Usage: check_regions.py FILE...  (exit status 1 on any mismatch)
"""

import csv
import math
import sys


def read(path):
    params = {}
    with open(path) as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("# param "):
            key, _, value = line[len("# param "):].partition("=")
            params[key] = value
        elif not line.startswith("#"):
            body.append(line)
    return params, list(csv.DictReader(body))


def floats(text):
    return [float(v) for v in text.split(",")]


def poly(coeffs, t):
    return sum(c * t ** k for k, c in enumerate(coeffs))


def dpoly(coeffs, t):
    return sum(k * c * t ** (k - 1) for k, c in enumerate(coeffs) if k)


def domain(params, n):
    """Centre, centre velocity, radius and radius rate as functions of t."""
    if "domain.center_profile" in params:
        groups = [floats(g) for g in params["domain.center_profile"].split(";")]
    else:
        groups = [[c] for c in floats(params.get("domain.center", ",".join(["0"] * n)))]
    radius = floats(params.get("domain.radius_profile", params.get("domain.radius", "1")))
    return (lambda t: [poly(g, t) for g in groups], lambda t: [dpoly(g, t) for g in groups],
            lambda t: poly(radius, t), lambda t: dpoly(radius, t))


def close(a, b, tol=1e-11):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def check(path):
    params, rows = read(path)
    if params.get("domain.kind") != "ball" or params.get("domain.m") != "1":
        raise SystemExit(f"{path}: only m = 1 balls are supported by this checker")
    n = int(params["domain.n"])
    p_t = floats(params.get("carleman.p_t", "0"))[0]
    c, dc, rho, drho = domain(params, n)
    p_x = floats(params["carleman.p_x"]) if "carleman.p_x" in params else c(p_t)
    errors = []
    eps_estimates = []
    for i, row in enumerate(rows):
        t = float(row["t1"])
        x = [float(row[f"x{j + 1}"]) for j in range(n)]
        nu_t = float(row["nu_t1"])
        nu_x = [float(row[f"nu_x{j + 1}"]) for j in range(n)]
        ct, vt = c(t), dc(t)
        rel = [x[j] - ct[j] for j in range(n)]
        dist = math.sqrt(sum(v * v for v in rel))
        if not close(dist, rho(t), 1e-12):
            errors.append(f"row {i}: point is off the boundary")
        # Level set |x - c(t)|^2 - rho(t)^2, gradient raised with diag(-1, 1, ..., 1).
        g_t = 2 * (sum(rel[j] * vt[j] for j in range(n)) + rho(t) * drho(t))
        g_x = [2 * v for v in rel]
        norm = math.sqrt(sum(v * v for v in g_x) - g_t * g_t)
        if not (close(nu_t, g_t / norm) and all(close(nu_x[j], g_x[j] / norm) for j in range(n))):
            errors.append(f"row {i}: normal differs from the raised level-set gradient")
        xp = [x[j] - p_x[j] for j in range(n)]
        r = math.sqrt(sum(v * v for v in xp))
        tp = t - p_t
        f = (r * r - tp * tp) / 4
        nf = 0.5 * (sum(nu_x[j] * xp[j] for j in range(n)) - nu_t * tp)
        if not close(float(row["f"]), f):
            errors.append(f"row {i}: f")
        if not close(float(row["normal_f"]), nf):
            errors.append(f"row {i}: normal_f")
        trace = f > 0
        bracket = float(row["bracket"])
        if trace:
            nr = sum(nu_x[j] * xp[j] for j in range(n)) / r
            # bracket = nf + eps (f nr - r nf); every row must share one eps.
            lever = f * nr - r * nf
            if abs(lever) > 1e-3:
                eps_estimates.append(((bracket - nf) / lever, i, nf, lever, bracket))
        elif bracket != 0.0:
            errors.append(f"row {i}: bracket set outside the trace")
        flags = (int(row["trace"]), int(row["gamma"]), int(row["gamma_eps"]))
        expect = (int(trace), int(trace and nf > 0), int(trace and bracket > 0))
        if flags != expect:
            errors.append(f"row {i}: flags {flags} expected {expect}")
        if not float(row["weight"]) > 0:
            errors.append(f"row {i}: nonpositive weight")
    if eps_estimates:
        eps = sorted(e[0] for e in eps_estimates)[len(eps_estimates) // 2]
        delta = float(params["carleman.delta"])
        # eps = delta^2 / R with R >= every distance on the trace.
        r_max = max(math.hypot(*[float(row[f"x{j + 1}"]) - p_x[j] for j in range(n)])
                    for row in rows if int(row["trace"]))
        if not (0 < eps <= delta * delta / r_max * (1 + 1e-9)):
            errors.append(f"eps {eps} inconsistent with delta {delta}")
        for e, i, nf, lever, bracket in eps_estimates:
            if not close(nf + eps * lever, bracket, 1e-9):
                errors.append(f"row {i}: bracket not affine in a common eps")
    return len(rows), errors


def main(paths):
    failed = False
    for path in paths:
        count, errors = check(path)
        status = "ok" if not errors and count else "FAILED"
        print(f"{path}: {count} rows {status}")
        for e in errors[:10]:
            print("  " + e)
        failed |= bool(errors) or not count
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
