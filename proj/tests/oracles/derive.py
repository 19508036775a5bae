"""Independent reference values for the unit tests.

Run with numpy/scipy available; the printed numbers are frozen into the C++
tests. Nothing here imports or mirrors the C++ code paths.
"""
import numpy as np
from scipy.optimize import brentq

a = np.exp(2j * np.pi / 3)
A = np.array([[1, 1, 1], [1, a * a, a], [1, a, a * a]])  # columns: s0, s1, s2


def fortescue_example():
    s1, s2, s0 = 1.0, 0.1j, 0.05
    v = A @ np.array([s0, s1, s2])
    print("fortescue abc:", [f"{x.real:.17g} {x.imag:.17g}" for x in v])


def rl_step():
    r, l = 1.0, 0.01
    tau = l / r
    print("rl i(3tau):", f"{(1 - np.exp(-3)) / r:.17g}", "tau", tau)


# Single-phase induction motor, classic double-revolving-field circuit.
P = dict(rs=0.03, xls=0.06, xm=2.0, rr=0.04, xlr=0.06, rated=0.975, ct=0.8)


def par(x, y):
    return x * y / (x + y)


def motor(v, w, p=P):
    s = 1 - w
    zf = par(1j * p["xm"], p["rr"] / s + 1j * p["xlr"])
    zb = par(1j * p["xm"], p["rr"] / (2 - s) + 1j * p["xlr"])
    z = p["rs"] + 1j * p["xls"] + 0.5 * zf + 0.5 * zb
    i = v / z
    return abs(i) ** 2 * 0.5 * (zf.real - zb.real), v * np.conj(i)


def motor_equilibrium():
    t_rated = motor(1.0, P["rated"])[0]
    c = P["ct"] * t_rated
    k = (1 - P["ct"]) * t_rated / P["rated"] ** 2
    f = lambda w, v: motor(v, w)[0] - (c + k * w * w)
    for v in (1.0, 0.9):
        w = brentq(lambda w: f(w, v), 0.9, 0.9999, xtol=1e-15)
        print(f"equilibrium speed at v={v}: {w:.15f}")
    s_run = motor(1.0, P["rated"])[1]
    zlr = P["rs"] + 1j * P["xls"] + par(1j * P["xm"], P["rr"] + 1j * P["xlr"])
    print("locked-rotor / running current:", f"{abs(1 / zlr) / abs(s_run):.6f}")


def thevenin_norton():
    z = 0.1j * np.eye(3)
    y = np.linalg.inv(z)
    i_n = y @ (A @ np.array([0, 1, 0]))
    print("norton y diag:", y[0, 0], "i_n:", i_n)


def controller():
    print("hold steps:", int(np.ceil((2 / 60) / 0.005 - 1e-9)))


def two_bus():
    y = 1 / 0.1j
    print("two-bus Y:", np.array([[y, -y], [-y, y]]))
    print("scalar solve:", 1 / (2 - 1j))




def ieee9_power_flow():
    """Positive-sequence power flow with constant-impedance loads."""
    from scipy.optimize import fsolve

    lines = [  # from, to, r, x, b
        (1, 4, 0, 0.0576, 0), (2, 7, 0, 0.0625, 0), (3, 9, 0, 0.0586, 0),
        (4, 5, 0.01, 0.085, 0.176), (4, 6, 0.017, 0.092, 0.158), (5, 7, 0.032, 0.161, 0.306),
        (6, 9, 0.039, 0.17, 0.358), (7, 8, 0.0085, 0.072, 0.149), (8, 9, 0.0119, 0.1008, 0.209),
    ]
    y = np.zeros((9, 9), complex)
    for f, t, r, x, b in lines:
        ys = 1 / complex(r, x)
        f, t = f - 1, t - 1
        y[f, f] += ys + 0.5j * b
        y[t, t] += ys + 0.5j * b
        y[f, t] -= ys
        y[t, f] -= ys
    for bus, p, q in ((5, 1.25, 0.5), (6, 0.9, 0.3), (8, 1.0, 0.35)):
        y[bus - 1, bus - 1] += complex(p, -q)
    vm = {1: 1.04, 2: 1.025, 3: 1.025}
    pset = {2: 1.63, 3: 0.85}

    def unpack(x):
        ang = np.concatenate([[0.0], x[:8]])
        mag = np.array([vm.get(k + 1, 0.0) for k in range(9)])
        mag[3:] = x[8:]
        return mag * np.exp(1j * ang)

    def mismatch(x):
        v = unpack(x)
        s = v * np.conj(y @ v)
        out = [s[k].real - pset.get(k + 1, 0.0) for k in range(1, 9)]
        out += [s[k].imag for k in range(3, 9)]
        return out

    x = fsolve(mismatch, np.concatenate([np.zeros(8), np.ones(6)]), xtol=1e-14)
    v = unpack(x)
    s = v * np.conj(y @ v)
    for k in range(9):
        print(f"bus {k + 1}: |V|={abs(v[k]):.12f} ang={np.degrees(np.angle(v[k])):.10f}")
    for k in range(3):
        print(f"gen {k + 1}: S={s[k].real:.12f}{s[k].imag:+.12f}j")


if __name__ == "__main__":
    fortescue_example()
    rl_step()
    motor_equilibrium()
    thevenin_norton()
    controller()
    two_bus()
    ieee9_power_flow()
