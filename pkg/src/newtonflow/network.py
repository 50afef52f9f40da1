"""Network equations in polar form over the reduced power-flow state.

The state holds voltage angles at PV and PQ buses followed by voltage
magnitudes at PQ buses, each block ordered by ascending bus id. Slack and PV
quantities that are not part of the state are recovered afterwards by
:func:`back_substitute`.

Mismatch sign convention: ``g = computed injection - scheduled injection``.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .casefile import Branch, BusKind, BusSolution, NetworkCase

__all__ = [
    "StateIndex",
    "StateVector",
    "PowerFlowModel",
    "build_admittance",
    "residual",
    "jacobian",
    "assemble_state",
    "back_substitute",
    "model_for",
]


@dataclass(frozen=True)
class StateIndex:
    angle_vars: tuple[int, ...]
    mag_vars: tuple[int, ...]

    @property
    def n_angle(self) -> int:
        return len(self.angle_vars)

    @property
    def n(self) -> int:
        return len(self.angle_vars) + len(self.mag_vars)

    def labels(self) -> list[str]:
        return [f"theta_{b}" for b in self.angle_vars] + [f"vm_{b}" for b in self.mag_vars]

    @classmethod
    def for_case(cls, case: NetworkCase) -> "StateIndex":
        angle = sorted(b.id for b in case.buses if b.kind is not BusKind.SLACK)
        mag = sorted(b.id for b in case.buses if b.kind is BusKind.PQ)
        return cls(tuple(angle), tuple(mag))


@dataclass
class StateVector:
    values: np.ndarray
    index: StateIndex

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.index.n,):
            raise ValueError(f"state has shape {self.values.shape}, index expects ({self.index.n},)")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("state has non-finite entries")

    def copy(self) -> "StateVector":
        return StateVector(self.values.copy(), self.index)


def _branch_terms(branches: list[Branch]):
    r = np.array([br.r for br in branches], dtype=float)
    x = np.array([br.x for br in branches], dtype=float)
    if np.any((r == 0) & (x == 0)):
        raise ValueError("branch with zero series impedance")
    ys = 1.0 / (r + 1j * x)
    bc = np.array([br.b_charging for br in branches], dtype=float)
    tap = np.array([br.tap_ratio * np.exp(1j * br.phase_shift) for br in branches], dtype=complex)
    ytt = ys + 0.5j * bc
    yff = ytt / (tap * np.conj(tap))
    yft = -ys / np.conj(tap)
    ytf = -ys / tap
    return yff, yft, ytf, ytt


def build_admittance(case: NetworkCase) -> sp.csr_matrix:
    """Bus admittance matrix (pi-model branches, taps, phase shifters, shunts).

    Rows and columns follow ``case.buses`` order.
    """
    nb = len(case.buses)
    pos = {b.id: k for k, b in enumerate(case.buses)}
    branches = case.active_branches()
    shunt = np.array([b.g_shunt + 1j * b.b_shunt for b in case.buses], dtype=complex)
    rows = [np.arange(nb)]
    cols = [np.arange(nb)]
    vals = [shunt]
    if branches:
        f = np.array([pos[br.from_bus] for br in branches])
        t = np.array([pos[br.to_bus] for br in branches])
        yff, yft, ytf, ytt = _branch_terms(branches)
        rows += [f, f, t, t]
        cols += [f, t, f, t]
        vals += [yff, yft, ytf, ytt]
    y = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(nb, nb)
    ).tocsr()
    y.sum_duplicates()
    return y


class PowerFlowModel:
    """Residual/Jacobian evaluator for one case; immutable after construction."""

    def __init__(self, case: NetworkCase):
        self.case = case
        self.index = StateIndex.for_case(case)
        self.ybus = build_admittance(case)
        nb = len(case.buses)
        self.n_bus = nb
        pos = {b.id: k for k, b in enumerate(case.buses)}
        self.bus_pos = pos
        self.ang_pos = np.array([pos[i] for i in self.index.angle_vars], dtype=int)
        self.mag_pos = np.array([pos[i] for i in self.index.mag_vars], dtype=int)

        sched = np.array([-(b.p_load + 1j * b.q_load) for b in case.buses], dtype=complex)
        vset: dict[int, float] = {}
        for g in case.active_generators():
            sched[pos[g.bus]] += g.p_gen + 1j * g.q_gen
            vset.setdefault(g.bus, g.v_set)
        self.s_sched = sched

        self.vm0 = np.array([b.v_mag_init for b in case.buses], dtype=float)
        self.va0 = np.array([b.v_ang_init for b in case.buses], dtype=float)
        for b in case.buses:
            if b.kind is not BusKind.PQ and b.id in vset:
                self.vm0[pos[b.id]] = vset[b.id]
        self._build_pattern()

    @property
    def n(self) -> int:
        return self.index.n

    @property
    def n_angle(self) -> int:
        return self.index.n_angle

    # -- state <-> voltages -------------------------------------------------
    def voltages(self, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        y = np.asarray(y, dtype=float)
        vm = self.vm0.copy()
        va = self.va0.copy()
        va[self.ang_pos] = y[: self.n_angle]
        vm[self.mag_pos] = y[self.n_angle :]
        return vm, va

    def state_from_voltages(self, vm: np.ndarray, va: np.ndarray) -> np.ndarray:
        return np.concatenate([np.asarray(va)[self.ang_pos], np.asarray(vm)[self.mag_pos]])

    def initial_state(self, angle_scale: float = 1.0) -> StateVector:
        if not angle_scale > 0:
            raise ValueError("angle_scale must be positive")
        y = self.state_from_voltages(self.vm0, self.va0)
        y[: self.n_angle] *= angle_scale
        return StateVector(y, self.index)

    # -- equations ------------------------------------------------------------
    def injections(self, vm: np.ndarray, va: np.ndarray) -> np.ndarray:
        v = vm * np.exp(1j * va)
        return v * np.conj(self.ybus @ v)

    def mismatch(self, vm: np.ndarray, va: np.ndarray) -> np.ndarray:
        mis = self.injections(vm, va) - self.s_sched
        return np.concatenate([mis.real[self.ang_pos], mis.imag[self.mag_pos]])

    def residual(self, y: np.ndarray) -> np.ndarray:
        return self.mismatch(*self.voltages(y))

    def _build_pattern(self):
        coo = self.ybus.tocoo()
        nb, n, na = self.n_bus, self.n, self.n_angle
        self._yr, self._yc, self._yv = coo.row, coo.col, coo.data
        diag = np.arange(nb)
        er = np.concatenate([coo.row, diag])
        ec = np.concatenate([coo.col, diag])
        arow = np.full(nb, -1)
        arow[self.ang_pos] = np.arange(na)
        mrow = np.full(nb, -1)
        mrow[self.mag_pos] = na + np.arange(len(self.mag_pos))
        masks, rows, cols = [], [], []
        for rmap, cmap in ((arow, arow), (arow, mrow), (mrow, arow), (mrow, mrow)):
            r, c = rmap[er], cmap[ec]
            m = (r >= 0) & (c >= 0)
            masks.append(m)
            rows.append(r[m])
            cols.append(c[m])
        self._masks = masks
        lin = np.concatenate(rows).astype(np.int64) * n + np.concatenate(cols)
        uniq, inv = np.unique(lin, return_inverse=True)
        self._slot = inv
        self._nnz = len(uniq)
        self._indices = (uniq % n).astype(np.int32)
        self._indptr = np.searchsorted(uniq // n, np.arange(n + 1)).astype(np.int32)

    def jacobian(self, y: np.ndarray) -> sp.csr_matrix:
        """Analytic Jacobian of :meth:`residual`; sparsity pattern fixed per case."""
        vm, va = self.voltages(y)
        v = vm * np.exp(1j * va)
        cur = self.ybus @ v
        yr, yc, yv = self._yr, self._yc, self._yv
        off = v[yr] * np.conj(yv * v[yc])
        d_va = np.concatenate([-1j * off, 1j * v * np.conj(cur)])
        d_vm = np.concatenate([off / vm[yc], np.conj(cur) * v / vm])
        blocks = (d_va.real, d_vm.real, d_va.imag, d_vm.imag)
        vals = np.concatenate([b[m] for b, m in zip(blocks, self._masks)])
        data = np.bincount(self._slot, weights=vals, minlength=self._nnz)
        return sp.csr_matrix((data, self._indices, self._indptr), shape=(self.n, self.n))

    # -- fast decoupled matrices ---------------------------------------------
    def fdpf_matrices(self) -> tuple[sp.csc_matrix, sp.csc_matrix]:
        """Reduced B' and B'' for the XB scheme.

        B' drops resistance, charging, shunts, taps and phase shifts; B''
        keeps everything except phase shifts.
        """
        case = self.case
        bp_case = dataclasses.replace(
            case,
            buses=tuple(dataclasses.replace(b, g_shunt=0.0, b_shunt=0.0) for b in case.buses),
            branches=tuple(
                dataclasses.replace(br, r=0.0, b_charging=0.0, tap_ratio=1.0, phase_shift=0.0)
                for br in case.branches
            ),
        )
        bpp_case = dataclasses.replace(
            case, branches=tuple(dataclasses.replace(br, phase_shift=0.0) for br in case.branches)
        )
        bp = -build_admittance(bp_case).imag
        bpp = -build_admittance(bpp_case).imag
        bp = bp[self.ang_pos][:, self.ang_pos].tocsc()
        bpp = bpp[self.mag_pos][:, self.mag_pos].tocsc()
        return bp, bpp

    # -- post-processing ------------------------------------------------------
    def branch_flows(self, vm: np.ndarray, va: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Complex power entering each in-service branch at its from/to end."""
        branches = self.case.active_branches()
        if not branches:
            return np.zeros(0, complex), np.zeros(0, complex)
        v = vm * np.exp(1j * va)
        f = np.array([self.bus_pos[br.from_bus] for br in branches])
        t = np.array([self.bus_pos[br.to_bus] for br in branches])
        yff, yft, ytf, ytt = _branch_terms(branches)
        s_f = v[f] * np.conj(yff * v[f] + yft * v[t])
        s_t = v[t] * np.conj(ytf * v[f] + ytt * v[t])
        return s_f, s_t

    def back_substitute(self, y: np.ndarray) -> list[BusSolution]:
        vm, va = self.voltages(y)
        s = self.injections(vm, va)
        return [
            BusSolution(b.id, float(vm[k]), float(va[k]), float(s[k].real), float(s[k].imag))
            for k, b in enumerate(self.case.buses)
        ]


_MODEL_CACHE: dict[int, tuple[NetworkCase, PowerFlowModel]] = {}


def model_for(case: NetworkCase | PowerFlowModel) -> PowerFlowModel:
    """Return a (cached) model for ``case``; models pass through unchanged."""
    if isinstance(case, PowerFlowModel):
        return case
    hit = _MODEL_CACHE.get(id(case))
    if hit is not None and hit[0] is case:
        return hit[1]
    model = PowerFlowModel(case)
    if len(_MODEL_CACHE) > 32:
        _MODEL_CACHE.clear()
    _MODEL_CACHE[id(case)] = (case, model)
    return model


def _values(y) -> np.ndarray:
    return y.values if isinstance(y, StateVector) else np.asarray(y, dtype=float)


def residual(case, y) -> np.ndarray:
    return model_for(case).residual(_values(y))


def jacobian(case, y) -> sp.csr_matrix:
    return model_for(case).jacobian(_values(y))


def assemble_state(case, angle_scale: float = 1.0) -> StateVector:
    """Initial state from the case profile with non-slack angles scaled."""
    return model_for(case).initial_state(angle_scale)


def back_substitute(case, y) -> list[BusSolution]:
    return model_for(case).back_substitute(_values(y))
