"""Offline symbolic derivations frozen into the package and its tests.

Run manually (``python tools/derive_oracles.py``); the printed expressions are
pasted into ``src/sphgas/mms.py`` and ``tests/``.  Nothing here is imported at
runtime.  See docs/mms_derivation.md for the write-up.
"""
import sympy as sp

x, t = sp.symbols("x t", positive=True)
mu, lam, gamma, eps = sp.symbols("mu lam gamma epsilon", positive=True)


def momentum_sources(r_star):
    """Interior and boundary forcing for a manufactured particle map r*(x,t).

    Interior:  S = (x/r)^2 rho0 v_t + P_x - [(2mu+lam) (r^2 v)_x / (r^2 r_x)]_x
    Boundary:  g(t) = [P - ((2mu+lam) v_x/r_x + 2 lam v/r)] at x=1
    with rho0 = 1 and P = (x^2 rho0 / (r^2 r_x))^gamma.
    """
    v = sp.diff(r_star, t)
    rx = sp.diff(r_star, x)
    pres = (x**2 / (r_star**2 * rx)) ** gamma
    flux = (2 * mu + lam) * sp.diff(r_star**2 * v, x) / (r_star**2 * rx)
    interior = (x / r_star) ** 2 * sp.diff(v, t) + sp.diff(pres, x) - sp.diff(flux, x)
    stress_b = (2 * mu + lam) * sp.diff(v, x) / rx + 2 * lam * v / r_star
    boundary = (pres - stress_b).subs(x, 1)
    return sp.simplify(interior), sp.simplify(boundary)


def show_default_case():
    s = 1 + eps * (1 - sp.exp(-t))
    interior, boundary = momentum_sources(x * s)
    print("== default (self-similar) case r* = x*(1 + eps*(1 - exp(-t)))")
    print("interior source:", interior)
    print("boundary source:", boundary)


def show_spatial_case():
    phi = eps * (1 - sp.exp(-t))
    r_star = x * (1 + phi * (1 + x**2 / 2))
    interior, boundary = momentum_sources(r_star)
    print("== spatial case r* = x*(1 + phi(t)*(1 + x^2/2)), phi = eps*(1-exp(-t))")
    print("interior source:")
    print(sp.python(interior))
    print("boundary source:")
    print(sp.python(boundary))
    # Frozen spot values used as regression anchors in tests.
    subs = {eps: sp.Rational(1, 10), mu: 1, lam: 1, gamma: 2}
    for (xx, tt) in [(sp.Rational(1, 2), sp.Rational(3, 10)), (sp.Rational(1, 4), 1)]:
        val = interior.subs(subs).subs({x: xx, t: tt})
        print(f"interior({xx},{tt}) =", sp.N(val, 20))
    print("boundary(0.3) =", sp.N(boundary.subs(subs).subs(t, sp.Rational(3, 10)), 20))


def show_initial_accelerations():
    """u1, u2 for rho0 = 1 + b x^2, u0 = a x (1 - x^2), gamma = 2."""
    a, b = sp.symbols("a b", positive=True)
    rho0 = 1 + b * x**2
    u0 = a * x * (1 - x**2)
    g = 2
    u1 = ((2 * mu + lam) * sp.diff(sp.diff(x**2 * u0, x) / x**2, x)
          - sp.diff(rho0**g, x)) / rho0
    u1 = sp.simplify(u1)
    u2 = ((2 * mu + lam) * sp.diff(sp.diff(x**2 * u1, x) / x**2, x)
          + g * sp.diff(rho0**g * sp.diff(x**2 * u0, x) / x**2, x)
          - (2 * mu + lam) * sp.diff(sp.diff(u0, x) ** 2 + 2 * (u0 / x) ** 2, x)
          ) / rho0 + 2 * u0 * u1 / x
    u2 = sp.simplify(u2)
    print("== u1, u2 for rho0 = 1 + b*x^2, u0 = a*x*(1-x^2), gamma = 2")
    print("u1 =", u1)
    print("u2 =", sp.factor(u2))


def show_g_diagnostic_norm():
    """L2 norm of d/dx ln((1+0.1x)^2 (1+0.2x)) on (0,1), for r = x(1+0.1x)."""
    g = sp.ln((1 + x / 10) ** 2 * (1 + x / 5))
    gx = sp.diff(g, x)
    val = sp.sqrt(sp.integrate(gx**2, (x, 0, 1)))
    print("== ||G_x||_L2 for r = x(1+0.1x):", sp.N(val, 20))


if __name__ == "__main__":
    show_default_case()
    show_spatial_case()
    show_initial_accelerations()
    show_g_diagnostic_norm()
