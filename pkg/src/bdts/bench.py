"""Multi-provider parallel download benchmark and per-phase op accounting.

Providers serve disjoint shard ranges over loopback socket pairs with a
per-connection bandwidth cap (default 60 MB/s), so adding providers shortens
the transfer even on one machine.  Wall-time figures are medians over the
configured repetitions; operation counts are timing-independent.
"""
from __future__ import annotations

import hashlib
import random
import socket
import statistics
import struct
import threading
import time
from dataclasses import dataclass, field

from . import crypto, metrics
from .contracts import ContractConfig, ContractSystem, SELLER_PAYEE, provider_payee
from .errors import InvalidInput
from .ledger import Ledger, address_for
from .merkle import mproof, mtree
from .metrics import OpCounters
from .sharding import DEFAULT_SLOT, provider_encrypt, reassemble, shard_encrypt

DEFAULT_BANDWIDTH = 60 * 1000 * 1000  # bytes/s per connection
_HEADER = struct.Struct("!II")  # shard index, payload length
_CHUNK = 64 * 1024

_TYPE_MAGIC = {
    "text": b"",
    "image": b"\x89PNG\r\n\x1a\n",
    "video": b"\x00\x00\x00\x18ftypmp42",
}


@dataclass
class BenchConfig:
    data_type: str = "text"
    size_bytes: int = 10 * 1000 * 1000
    providers: int = 1
    slot: int = DEFAULT_SLOT
    reps: int = 5
    seed: int = 0
    bandwidth: int = DEFAULT_BANDWIDTH

    def __post_init__(self):
        if not 1 <= self.providers <= 6:
            raise InvalidInput("provider count must be in 1..6")
        if self.size_bytes < 1 or self.slot < 1 or self.reps < 1:
            raise InvalidInput("size, slot, and reps must be >= 1")
        if self.data_type not in _TYPE_MAGIC:
            raise InvalidInput(f"data type must be one of {sorted(_TYPE_MAGIC)}")


@dataclass
class BenchReport:
    config: BenchConfig
    download_times: list[float] = field(default_factory=list)
    total_times: list[float] = field(default_factory=list)
    throughputs: list[float] = field(default_factory=list)
    counters: dict[str, dict[str, int]] = field(default_factory=dict)
    recovery: bool = False

    @property
    def median_download(self) -> float:
        return statistics.median(self.download_times)

    def summary(self) -> dict:
        return {
            "data_type": self.config.data_type,
            "size_bytes": self.config.size_bytes,
            "providers": self.config.providers,
            "reps": self.config.reps,
            "median_download_s": self.median_download,
            "mean_download_s": statistics.mean(self.download_times),
            "stdev_download_s": (
                statistics.stdev(self.download_times)
                if len(self.download_times) > 1
                else 0.0
            ),
            "mean_throughput_mb_s": statistics.mean(self.throughputs) / 1e6,
            "recovery": self.recovery,
            "counters": self.counters,
        }


def synthetic_data(data_type: str, size: int, seed: int) -> bytes:
    """Seeded incompressible bytes; image/video tags get a realistic header."""
    magic = _TYPE_MAGIC[data_type]
    body = random.Random(("bench", data_type, size, seed).__repr__()).randbytes(
        max(size - len(magic), 0)
    )
    return (magic + body)[:size]


def _serve(sock: socket.socket, shards: dict[int, bytes], bandwidth: int) -> None:
    """Send each shard framed as (index, length, bytes) under a rate cap."""
    start = time.perf_counter()
    sent = 0
    try:
        for index, payload in shards.items():
            blob = _HEADER.pack(index, len(payload)) + payload
            for off in range(0, len(blob), _CHUNK):
                sock.sendall(blob[off : off + _CHUNK])
                sent += len(blob[off : off + _CHUNK])
                due = sent / bandwidth
                elapsed = time.perf_counter() - start
                if due > elapsed:
                    time.sleep(due - elapsed)
    finally:
        sock.shutdown(socket.SHUT_WR)


def _recv_exact(sock: socket.socket, size: int) -> bytes:
    buf = bytearray()
    while len(buf) < size:
        part = sock.recv(min(_CHUNK, size - len(buf)))
        if not part:
            raise ConnectionError("peer closed mid-frame")
        buf += part
    return bytes(buf)


def _fetch(sock: socket.socket, count: int, into: dict[int, bytes]) -> None:
    for _ in range(count):
        index, length = _HEADER.unpack(_recv_exact(sock, _HEADER.size))
        into[index] = _recv_exact(sock, length)


def _ranges(n: int, parts: int) -> list[list[int]]:
    """Split [0, n) into ``parts`` near-equal contiguous index ranges."""
    base, extra = divmod(n, parts)
    out, cursor = [], 0
    for p in range(parts):
        width = base + (1 if p < extra else 0)
        out.append(list(range(cursor, cursor + width)))
        cursor += width
    return [r for r in out if r]


def bench_download(config: BenchConfig) -> BenchReport:
    data = synthetic_data(config.data_type, config.size_bytes, config.seed)
    report = BenchReport(config=config)
    for rep in range(config.reps):
        report_ops, download_s, total_s, recovered = _run_once(config, data)
        report.download_times.append(download_s)
        report.total_times.append(total_s)
        report.throughputs.append(config.size_bytes / download_s)
        report.recovery = recovered if rep == 0 else (report.recovery and recovered)
        if rep == 0:
            report.counters = report_ops
        elif report.counters != report_ops:
            raise InvalidInput("operation counts varied between repetitions")
    return report


def _run_once(config: BenchConfig, data: bytes) -> tuple[dict, float, float, bool]:
    seed_tag = str(config.seed).encode()
    seller = address_for("bench:seller")
    consumer = address_for("bench:consumer")
    providers = [address_for(f"bench:provider{p}") for p in range(config.providers)]
    price, unit_price = 40, 1
    endow = price * 100 + config.size_bytes // config.slot + 10
    ledger = Ledger({seller: endow, consumer: endow, **{p: endow for p in providers}})
    system = ContractSystem(ledger, ContractConfig())
    began = time.perf_counter()
    with metrics.collect() as col:
        with col.phase("upload"):
            master = hashlib.sha256(b"bench-master" + seed_tag).digest()
            shards = shard_encrypt(master, data, config.slot)
            data_id = system.ssmc_register_seller(
                seller, "tcp://seller", f"bench {config.data_type}", len(data),
                shards.n, shards.root_plain, shards.root_enc, price, unit_price,
                deposit=system.min_deposit(price),
            )
            ledger.mine_block()
            ledger.mine_block()
            pieces = [
                (i, shards.plain_shards[i], mproof(shards.tree_plain, i),
                 mproof(shards.tree_enc, i), shards.enc_shards[i])
                for i in system.expected_exposure_indices(data_id)
            ]
            system.ssmc_expose(data_id, pieces)
            for p, addr in enumerate(providers):
                system.ssmc_register_provider(addr, f"tcp://p{p}", data_id)
                system.ssmc_confirm_provider(seller, addr, data_id)
            ledger.mine_block()

        ranges = _ranges(shards.n, config.providers)
        serving = providers[: len(ranges)]
        order_id = system.scmc_place_order(
            consumer, data_id, price + shards.n * unit_price
        )
        system.scmc_select(order_id, list(zip(serving, ranges)))

        with col.phase("download"):
            packages = []
            for p, indices in enumerate(ranges):
                pkg = provider_encrypt(
                    [shards.enc_shards[i] for i in indices],
                    hashlib.sha256(b"bench-sp" + bytes([p]) + seed_tag).digest(),
                )
                packages.append(pkg)
                system.scmc_record_provider_root(order_id, serving[p], pkg.root)
            escrow = system.cpc_open(order_id)
            kp = crypto.pk_keygen(b"bench-consumer" + seed_tag)
            system.cpc_post_pubkey(order_id, kp.public)
            for p, addr in enumerate(serving):
                system.cpc_post_key(
                    order_id, provider_payee(addr),
                    crypto.pk_encrypt(kp.public, packages[p].key),
                )
            ledger.mine_block()

            # parallel transfer: one serving thread and one reader per provider
            wire: dict[int, bytes] = {}
            threads = []
            t0 = time.perf_counter()
            for p, indices in enumerate(ranges):
                left, right = socket.socketpair()
                payloads = dict(zip(indices, packages[p].eed_shards))
                threads.append(
                    threading.Thread(
                        target=_serve, args=(left, payloads, config.bandwidth)
                    )
                )
                threads.append(
                    threading.Thread(target=_fetch, args=(right, len(indices), wire))
                )
            for t in threads:
                t.start()
            for t in threads:
                t.join()
            download_s = time.perf_counter() - t0

            inner: list[bytes] = [b""] * shards.n
            for p, indices in enumerate(ranges):
                key = crypto.pk_decrypt(
                    kp.private, escrow.posted_keys[provider_payee(serving[p])]
                )
                for i in indices:
                    inner[i] = crypto.sym_decrypt(key, wire[i])

        with col.phase("decrypt"):
            system.cpc_post_key(
                order_id, SELLER_PAYEE, crypto.pk_encrypt(kp.public, master)
            )
            ledger.mine_block()
            got_master = crypto.pk_decrypt(kp.private, escrow.posted_keys[SELLER_PAYEE])
            keys = crypto.derive_keys(got_master, shards.n)
            plain = [crypto.sym_decrypt(keys[i], inner[i]) for i in range(shards.n)]
            recovered = (
                mtree(plain).root == shards.root_plain and reassemble(plain) == data
            )

        for _ in range(system.config.appeal_window + 1):
            ledger.mine_block()
        system.cpc_settle(order_id)
        total_s = time.perf_counter() - began
        ops = {label: c.as_dict() for label, c in col.phases.items()}
    return ops, download_s, total_s, recovered


def count_phase_ops(transcript) -> dict[str, OpCounters]:
    """Per-phase operation counters of a completed run transcript."""
    return {
        label: OpCounters(**ops) for label, ops in transcript.phase_ops.items()
    }
