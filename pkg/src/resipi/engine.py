"""Flit-level engine: owns the state arrays and drives the cycle kernel."""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from . import _kernel as K
from .kernel import bind, get_kernel, name_of

PORTS = ("N", "E", "S", "W", "L", "GW")
NORTH, EAST, SOUTH, WEST, LOCAL, GATEWAY = range(6)
CHUNK = 8192


class EngineError(RuntimeError):
    pass


def serialization_cycles(bits: int, wavelengths: int, datarate_gbps, freq_ghz) -> int:
    """Cycles to put ``bits`` on ``wavelengths`` channels (exact ceiling)."""
    if wavelengths < 1:
        raise EngineError("cannot transmit on zero wavelengths")
    t = Fraction(bits) / (wavelengths * Fraction(str(datarate_gbps))) * Fraction(str(freq_ghz))
    return max(1, math.ceil(t))


def optical_transmit(bits: int, wavelengths: int, datarate_gbps, freq_ghz,
                     propagation: int = 1) -> int:
    """Writer-to-reader latency in cycles: serialization plus propagation."""
    return serialization_cycles(bits, wavelengths, datarate_gbps, freq_ghz) + propagation


def route_compute(cur, dst, gateway=None) -> int:
    """XY output port at ``cur`` for a head heading to ``dst`` ((row, col) pairs).

    With ``gateway`` set the head is an inter-chiplet packet and targets that
    router, leaving through the gateway port once there.
    """
    target = gateway if gateway is not None else dst
    if tuple(cur) == tuple(target):
        return GATEWAY if gateway is not None else LOCAL
    (r, c), (tr, tc) = cur, target
    if tc != c:
        return EAST if tc > c else WEST
    return NORTH if tr > r else SOUTH


class NoTraffic:
    def generate(self, c0, c1):
        e = np.zeros(0, np.int64)
        return e, e, e


class Engine:
    """Cycle-accurate network state plus the traffic feed."""

    def __init__(self, cfg, topology, table, traffic, kernel=None, pool: int = 4096,
                 log_capacity: int = 0, wavelengths=None):
        self.cfg = cfg
        self.topo = topology
        self.table = table
        self.traffic = traffic if traffic is not None else NoTraffic()
        self.kernel = get_kernel(kernel) if kernel is None or isinstance(kernel, str) else kernel
        t = topology
        R, NR, G, C, M = t.routers_per_chiplet, t.n_routers, t.gateways_per_chiplet, t.num_chiplets, t.mem_gateways
        NGW, NN = t.n_gateways, t.n_nodes
        F, B = cfg.packet_flits, cfg.buffer_flits
        Q = max(1, cfg.gw_buffer_flits // F)
        self.Q = Q
        i64 = np.int64
        a = {}
        prm = np.zeros(K.N_PRM, i64)
        prm[[K.P_NR, K.P_R, K.P_C, K.P_G, K.P_M, K.P_NGW, K.P_NN, K.P_COLS]] = (
            NR, R, C, G, M, NGW, NN, t.cols)
        prm[[K.P_F, K.P_B, K.P_D, K.P_Q, K.P_GWCAP, K.P_PROP]] = (
            F, B, cfg.pipeline_depth, Q, cfg.gw_buffer_flits, cfg.propagation_cycles)
        prm[K.P_LOGCAP] = log_capacity
        prm[K.P_LOG] = 1 if log_capacity else 0
        a["prm"] = prm
        a["st"] = np.zeros(K.N_ST, i64)
        a["acc"] = np.zeros(K.N_ACC, i64)
        nv = NR * 12
        a["bflit"] = np.zeros(nv * B, i64)
        a["barr"] = np.zeros(nv * B, i64)
        a["bhead"] = np.zeros(nv, i64)
        a["bcnt"] = np.zeros(nv, i64)
        a["bout"] = np.full(nv, -1, i64)
        a["rcnt"] = np.zeros(NR, i64)
        a["olock"] = np.full(nv, -1, i64)
        a["pend"] = np.zeros(NR * 12, i64)
        nbr = np.full(NR * 4, -1, i64)
        credit = np.zeros(nv, i64)
        for r in range(NR):
            chip, row, col = t.router_coord(r)
            for p, (dr, dc) in enumerate(((1, 0), (0, 1), (-1, 0), (0, -1))):
                rr, cc = row + dr, col + dc
                if 0 <= rr < t.rows and 0 <= cc < t.cols:
                    nbr[r * 4 + p] = t.router_id(chip, rr, cc)
                    credit[r * 12 + p * 2:r * 12 + p * 2 + 2] = B
        a["nbr"] = nbr
        a["credit"] = credit
        rgw = np.full(NR, -1, i64)
        gw_router = np.full(NGW, -1, i64)
        for gw in t.gateways:
            gw_router[gw.gid] = gw.router
            if gw.router >= 0:
                rgw[gw.router] = gw.gid
        a["rgw"] = rgw
        a["gw_router"] = gw_router
        a["qhead"] = np.full(NN, -1, i64)
        a["qtail"] = np.full(NN, -1, i64)
        a["injseq"] = np.zeros(NN, i64)
        a["memfree"] = np.zeros(max(M, 1), i64)
        a["gw_on"] = np.ones(NGW, i64)
        a["gw_acc"] = np.ones(NGW, i64)
        a["gw_busy"] = np.zeros(NGW, i64)
        a["gw_ser"] = np.zeros(NGW, i64)
        a["draining"] = np.zeros(NGW, i64)
        for k in ("gwq", "rdq"):
            a[k] = np.zeros(NGW * Q, i64)
        for k in ("gwq_head", "gwq_cnt", "gw_fill", "gw_flits", "tx_end", "gw_sent",
                  "rdq_head", "rdq_cnt", "rd_seq", "rd_flits"):
            a[k] = np.zeros(NGW, i64)
        a["tx_pid"] = np.full(NGW, -1, i64)
        a["src_tab"] = np.ascontiguousarray(table.source, dtype=i64).ravel().copy()
        a["dst_tab"] = np.ascontiguousarray(table.dest, dtype=i64).ravel().copy()
        for k in ("p_src", "p_dst", "p_inj", "p_sgw", "p_dgw", "p_tgw", "p_ttx", "p_trx", "p_next", "p_gin"):
            a[k] = np.full(pool, -1, i64)
        a["fstack"] = np.arange(pool - 1, -1, -1, dtype=i64)
        a["st"][K.S_FTOP] = pool
        a["res_sum"] = np.zeros(NR, i64)
        a["res_cnt"] = np.zeros(NR, i64)
        a["log"] = np.zeros(max(1, log_capacity) * K.LOG_FIELDS, i64)
        for k in ("inj_c", "inj_s", "inj_d"):
            a[k] = np.zeros(1, i64)
        self.a = a
        self.pool = pool
        self._chunk_end = 0
        self._log_rows = []
        w = wavelengths if wavelengths is not None else cfg.wavelengths
        self.set_wavelengths(w)
        self._core = bind(self.kernel, a)

    # -- configuration -------------------------------------------------------

    @property
    def implementation(self) -> str:
        return name_of(self.kernel)

    @property
    def cycle(self) -> int:
        return int(self.a["st"][K.S_CYCLE])

    def set_wavelengths(self, wavelengths) -> None:
        """Set per-gateway wavelength counts (int for all) and serialization."""
        n = self.topo.n_gateways
        w = [wavelengths] * n if isinstance(wavelengths, (int, np.integer)) else list(wavelengths)
        if len(w) != n:
            raise EngineError("need one wavelength count per gateway")
        self.wavelengths = [int(x) for x in w]
        for g, x in enumerate(self.wavelengths):
            self.a["gw_ser"][g] = serialization_cycles(
                self.cfg.packet_bits, x, self.cfg.datarate_gbps, self.cfg.noc_freq_ghz)

    def set_gateway(self, gid: int, on: bool | None = None, accepting: bool | None = None,
                    busy_until: int | None = None) -> None:
        if on is not None:
            if not on and (self.a["gw_fill"][gid] or self.a["rdq_cnt"][gid]
                           or self.a["tx_pid"][gid] >= 0):
                raise EngineError(f"gateway {gid} powered off while holding packets")
            self.a["gw_on"][gid] = int(on)
            if not on:
                self.a["gw_acc"][gid] = 0
        if accepting is not None:
            if accepting and not self.a["gw_on"][gid]:
                raise EngineError(f"gateway {gid} is off and cannot accept")
            self.a["gw_acc"][gid] = int(accepting)
        if busy_until is not None:
            self.a["gw_busy"][gid] = max(int(self.a["gw_busy"][gid]), busy_until)

    def set_measure_start(self, cycle: int) -> None:
        self.a["prm"][K.P_MEAS] = cycle

    # -- running -------------------------------------------------------------

    def _grow_pool(self) -> None:
        old, new = self.pool, self.pool * 2
        a = self.a
        for k in ("p_src", "p_dst", "p_inj", "p_sgw", "p_dgw", "p_tgw", "p_ttx", "p_trx", "p_next", "p_gin"):
            arr = np.full(new, -1, np.int64)
            arr[:old] = a[k]
            a[k] = arr
        ftop = int(a["st"][K.S_FTOP])
        fs = np.zeros(new, np.int64)
        fs[:ftop] = a["fstack"][:ftop]
        fs[ftop:ftop + new - old] = np.arange(new - 1, old - 1, -1)
        a["fstack"] = fs
        a["st"][K.S_FTOP] = ftop + new - old
        self.pool = new
        self._core = bind(self.kernel, a)

    def _load_chunk(self, c0: int, c1: int) -> None:
        cyc, src, dst = self.traffic.generate(c0, c1)
        a = self.a
        for k, v in (("inj_c", cyc), ("inj_s", src), ("inj_d", dst)):
            a[k] = np.ascontiguousarray(v, dtype=np.int64) if len(v) else np.zeros(1, np.int64)
        a["prm"][K.P_NINJ] = len(cyc)
        a["st"][K.S_INJPTR] = 0
        self._chunk_end = c1
        self._core = bind(self.kernel, a)

    def _drain_log(self) -> None:
        n = int(self.a["st"][K.S_LOGN])
        if n:
            self._log_rows.append(self.a["log"][:n * K.LOG_FIELDS].reshape(n, K.LOG_FIELDS).copy())
            self.a["st"][K.S_LOGN] = 0

    def run(self, until: int, stop_when_drained: bool = False) -> int:
        """Advance to cycle ``until``; returns the cycle reached.

        With ``stop_when_drained`` the run stops early once every gateway
        flagged as draining holds no packets.
        """
        self.a["prm"][K.P_DRAIN] = 1 if stop_when_drained else 0
        try:
            while self.cycle < until:
                if self.cycle >= self._chunk_end:
                    self._load_chunk(self.cycle, self.cycle + CHUNK)
                status = self._core.run(min(until, self._chunk_end))
                if status == K.POOL:
                    self._grow_pool()
                elif status == K.LOGFULL:
                    self._drain_log()
                elif status == K.DRAINED:
                    break
        finally:
            self.a["prm"][K.P_DRAIN] = 0
        return self.cycle

    def drained(self) -> bool:
        a = self.a
        d = a["draining"].astype(bool)
        return not (d & ((a["gw_fill"] > 0) | (a["rdq_cnt"] > 0) | (a["tx_pid"] >= 0))).any()

    # -- observation ---------------------------------------------------------

    def delivery_log(self) -> np.ndarray:
        """Delivered packets as rows (src, dst, inject, at_gateway, tx, rx, done, sgw, dgw)."""
        self._drain_log()
        if not self._log_rows:
            return np.zeros((0, K.LOG_FIELDS), np.int64)
        return np.concatenate(self._log_rows)

    def counters(self) -> dict:
        st = self.a["st"]
        return {
            "cycle": int(st[K.S_CYCLE]),
            "generated": int(st[K.S_GEN]),
            "delivered": int(st[K.S_DELALL]),
            "flits_injected": int(st[K.S_INJF]),
            "flits_delivered": int(st[K.S_DELF]),
        }

    def in_flight_flits(self) -> int:
        a = self.a
        return int(a["bcnt"].sum() + a["gw_flits"].sum() + a["rd_flits"].sum())

    def accumulators(self) -> np.ndarray:
        return self.a["acc"].copy()

    def reset_accumulators(self) -> None:
        self.a["acc"][:] = 0

    def residency(self):
        return self.a["res_sum"].copy(), self.a["res_cnt"].copy()

    def reset_residency(self) -> None:
        self.a["res_sum"][:] = 0
        self.a["res_cnt"][:] = 0

    def take_gateway_sent(self) -> np.ndarray:
        out = self.a["gw_sent"].copy()
        self.a["gw_sent"][:] = 0
        return out

    def state_digest(self) -> str:
        import hashlib
        h = hashlib.sha256()
        for k in sorted(self.a):
            if k in ("inj_c", "inj_s", "inj_d", "log"):
                continue
            h.update(k.encode())
            h.update(np.ascontiguousarray(self.a[k]).tobytes())
        return h.hexdigest()
