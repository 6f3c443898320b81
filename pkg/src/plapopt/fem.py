"""P1 finite element kernels on DomainMesh triangulations.

Everything here works on raw nodal arrays; the solver module wraps these
kernels behind the load/state field types. Volume quadrature uses the
3-point degree-2 rule (barycentric permutations of (2/3, 1/6, 1/6)),
boundary quadrature uses 2-point Gauss per cell. Gradients of P1 fields
are constant per triangle.
"""

import numpy as np
from scipy import sparse

# Barycentric coordinates and weights of the degree-2 triangle rule.
TRI_QP = np.array([
    [2 / 3, 1 / 6, 1 / 6],
    [1 / 6, 2 / 3, 1 / 6],
    [1 / 6, 1 / 6, 2 / 3],
])
TRI_QW = np.array([1 / 3, 1 / 3, 1 / 3])

# 2-point Gauss nodes on [0, 1].
EDGE_QP = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])
EDGE_QW = np.array([0.5, 0.5])


class P1Space:
    """Precomputed assembly data for P1 elements on a fixed mesh."""

    def __init__(self, mesh):
        self.mesh = mesh
        tri = mesh.triangles
        p = mesh.vertices[tri]  # (n_t, 3, 2)
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        self.areas = 0.5 * det  # positive for CCW triangles
        # grads[t, i, :] = gradient of the hat function of local vertex i.
        g = np.empty((tri.shape[0], 3, 2))
        g[:, 1, 0] = d2[:, 1] / det
        g[:, 1, 1] = -d2[:, 0] / det
        g[:, 2, 0] = -d1[:, 1] / det
        g[:, 2, 1] = d1[:, 0] / det
        g[:, 0] = -g[:, 1] - g[:, 2]
        self.grads = g
        self.qpoints = np.einsum("qi,tid->tqd", TRI_QP, p)  # (n_t, 3, 2)
        self.qweights = self.areas[:, None] * TRI_QW[None, :]

        rows = np.repeat(tri, 3, axis=1).ravel()
        cols = np.tile(tri, (1, 3)).ravel()
        self._coo = (rows, cols)

        loop = mesh.boundary_loop
        self.edge_a = loop
        self.edge_b = np.roll(loop, -1)

    @property
    def n(self):
        return self.mesh.n_vertices

    def gradient(self, u):
        """Per-triangle constant gradient of the nodal field u; (n_t, 2)."""
        return np.einsum("ti,tid->td", u[self.mesh.triangles], self.grads)

    def values_at_qp(self, u):
        """u at the volume quadrature points; (n_t, 3)."""
        return u[self.mesh.triangles] @ TRI_QP.T

    def integrate_lp(self, u, p):
        """(integral of |grad u|^p, integral of |u|^p) over the domain."""
        g = self.gradient(u)
        g2 = np.einsum("td,td->t", g, g)
        grad_term = float(self.areas @ g2 ** (p / 2.0))
        uq = self.values_at_qp(u)
        mass_term = float(np.sum(self.qweights * np.abs(uq) ** p))
        return grad_term, mass_term

    def energy(self, u, b, p, eps):
        """(1/p) int (|grad u|^2 + eps^2)^{p/2} + |u|^p dx - b.u"""
        g = self.gradient(u)
        g2 = np.einsum("td,td->t", g, g)
        grad_term = float(self.areas @ (g2 + eps * eps) ** (p / 2.0))
        uq = self.values_at_qp(u)
        mass_term = float(np.sum(self.qweights * np.abs(uq) ** p))
        return (grad_term + mass_term) / p - float(b @ u)

    def residual(self, u, b, p, eps):
        """Gradient of ``energy`` with respect to the nodal values."""
        tri = self.mesh.triangles
        g = self.gradient(u)
        g2 = np.einsum("td,td->t", g, g)
        s = g2 + eps * eps
        # coef * g -> |g|^{p-1} -> 0 where s = 0, so the zero branch is the
        # correct limit even for p < 2 where the bare power diverges
        with np.errstate(divide="ignore"):
            coef = np.where(s > 0.0, s ** ((p - 2.0) / 2.0), 0.0)
        # (n_t, 3): d/du_i of the gradient part on each triangle
        flux = np.einsum("t,tid,td->ti", self.areas * coef, self.grads, g)
        uq = self.values_at_qp(u)
        # |u|^{p-2} u written as sign(u)|u|^{p-1}, finite at u = 0 for p > 1
        mass = np.sign(uq) * np.abs(uq) ** (p - 1.0) * self.qweights
        local = flux + mass @ TRI_QP
        r = np.zeros(self.n)
        np.add.at(r, tri.ravel(), local.ravel())
        return r - b

    def hessian(self, u, p, eps, mass_floor_frac=1e-2):
        """Sparse Hessian of ``energy``; SPD for 1 < p and eps > 0.

        The mass coefficient (p-1)|u|^{p-2} is evaluated with |u| floored
        at max(eps, mass_floor_frac * rms(u)): the exact coefficient blows
        up at u = 0 for p < 2 (stalling Newton with tiny damped steps near
        zero crossings) and vanishes there for p > 2 (making the matrix
        singular at the zero start). The energy and residual are
        untouched, so only the Newton direction is affected; the line
        search on the exact energy keeps the iteration globally
        convergent.
        """
        g = self.gradient(u)
        g2 = np.einsum("td,td->t", g, g)
        s = g2 + eps * eps
        with np.errstate(divide="ignore"):
            c1 = self.areas * np.where(s > 0.0, s ** ((p - 2.0) / 2.0), 0.0)
            c2 = self.areas * (p - 2.0) * np.where(
                s > 0.0, s ** ((p - 4.0) / 2.0), 0.0
            )
        bg = np.einsum("tid,td->ti", self.grads, g)  # (n_t, 3)
        gg = np.einsum("tid,tjd->tij", self.grads, self.grads)
        local = c1[:, None, None] * gg + c2[:, None, None] * np.einsum(
            "ti,tj->tij", bg, bg
        )
        uq = self.values_at_qp(u)
        floor = max(eps, mass_floor_frac * float(np.sqrt(np.mean(uq * uq))))
        mc = (uq * uq + floor * floor) ** ((p - 2.0) / 2.0)
        w = (p - 1.0) * self.qweights * mc  # (n_t, 3)
        local += np.einsum("tq,qi,qj->tij", w, TRI_QP, TRI_QP)
        H = sparse.coo_matrix(
            (local.ravel(), self._coo), shape=(self.n, self.n)
        )
        return H.tocsc()

    def load_vector(self, cell_values):
        """Nodal load vector of a cellwise-constant boundary flux."""
        w = self.mesh.boundary_weights
        contrib = 0.5 * np.asarray(cell_values) * w
        b = np.zeros(self.n)
        np.add.at(b, self.edge_a, contrib)
        np.add.at(b, self.edge_b, contrib)
        return b

    def load_vector_from_function(self, fun, chart):
        """Nodal load vector of a boundary flux given as a function of
        arclength, integrated exactly cell by cell.

        ``fun`` must expose ``piecewise_on(a, b)`` yielding
        (left, right, value) subintervals of [a, b] on which it is
        constant; step functions transported by a boundary flow do.
        """
        w = self.mesh.boundary_weights
        starts = chart.cell_starts
        b = np.zeros(self.n)
        for c in range(self.mesh.n_boundary_cells):
            s0, s1 = starts[c], starts[c + 1]
            acc_a = acc_b = 0.0
            for lo, hi, val in fun.piecewise_on(s0, s1):
                # hat of edge_a falls 1 -> 0 over [s0, s1]; edge_b rises.
                acc_a += val * ((s1 - lo) ** 2 - (s1 - hi) ** 2)
                acc_b += val * ((hi - s0) ** 2 - (lo - s0) ** 2)
            b[self.edge_a[c]] += 0.5 * acc_a / w[c]
            b[self.edge_b[c]] += 0.5 * acc_b / w[c]
        return b

    def trace_average(self, u):
        """Per-cell average of u over each boundary cell; (n_b,)."""
        return 0.5 * (u[self.edge_a] + u[self.edge_b])

    def boundary_gauss_points(self, chart):
        """Arclength positions of the 2-point Gauss nodes of every cell;
        (n_b, 2)."""
        starts = chart.cell_starts
        w = self.mesh.boundary_weights
        return starts[:-1, None] + w[:, None] * EDGE_QP[None, :]

    def trace_at_gauss(self, u):
        """u at the boundary Gauss nodes; (n_b, 2)."""
        ua = u[self.edge_a][:, None]
        ub = u[self.edge_b][:, None]
        return ua * (1.0 - EDGE_QP)[None, :] + ub * EDGE_QP[None, :]
