"""Deployment directories: key material, server configs and server processes.

A deployment directory holds everything a desk-scale run needs::

    tls/            private TLS CA, server and client certificates
    ltca.key        LTCA signing key (PKCS#8 PEM)
    pca.key         PCA signing key
    ltca.json       config for ``vpki ltca serve``
    pca.json        config for ``vpki pca serve``
    client.json     what vehicles and the resolution authority need to connect

Relative paths inside a config resolve against the config file's directory.
"""

from __future__ import annotations

import json
import logging
import os
import secrets
import subprocess
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import crypto, tls
from .clock import clock_from_config
from .ltca import Ltca, LtcaConfig
from .pca import Pca, PcaConfig
from .policy import PolicyKind
from .store import LtcaStore, PcaStore
from .transport import TcpTransport

log = logging.getLogger(__name__)

LTCA_ID = "ltca-1"
PCA_ID = "pca-1"


def _resolve(base: Path, p: Optional[str]) -> Optional[Path]:
    if p is None:
        return None
    path = Path(p)
    return path if path.is_absolute() else base / path


def load_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def dump_json(obj, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def create_deployment(out_dir, *, policy: PolicyKind = PolicyKind.P3, tau_p_ms: int = 30_000,
                      gamma_ms: int = 300_000, t_date_ms: int = 0, skew_ms: int = 60_000,
                      grace_ms: int = 60_000, clock: Optional[dict] = None,
                      db: bool = True, tls_enabled: bool = True) -> Path:
    """Generate keys, credentials and configs for one LTCA and one PCA."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if tls_enabled:
        tls.create_tls_material(out / "tls")
    ltca_kp, pca_kp = crypto.generate_keypair(), crypto.generate_keypair()
    crypto.save_private_key(out / "ltca.key", ltca_kp)
    crypto.save_private_key(out / "pca.key", pca_kp)
    ra_cred, admin_cred = secrets.token_hex(16), secrets.token_hex(16)
    clock = clock or {"kind": "system"}

    ltca_cfg = {
        "issuer_id": LTCA_ID,
        "listen": "127.0.0.1:0",
        "signing_key": "ltca.key",
        "db": "ltca.db" if db else None,
        "skew_ms": skew_ms,
        "grace_ms": grace_ms,
        "ra_credential": ra_cred,
        "admin_credential": admin_cred,
        "clock": clock,
        "tls": {"cert": "tls/ltca.pem", "key": "tls/ltca.key", "client_ca": "tls/ca.pem"}
        if tls_enabled else None,
    }
    pca_cfg = {
        "pca_id": PCA_ID,
        "listen": "127.0.0.1:0",
        "signing_key": "pca.key",
        "db": "pca.db" if db else None,
        "trust_store": {LTCA_ID: ltca_kp.public.hex()},
        "policy": policy.label,
        "tau_p_ms": tau_p_ms,
        "gamma_ms": gamma_ms,
        "t_date_ms": t_date_ms,
        "skew_ms": skew_ms,
        "ra_credential": ra_cred,
        "clock": clock,
        "tls": {"cert": "tls/pca.pem", "key": "tls/pca.key"} if tls_enabled else None,
    }
    client_cfg = {
        "ltca_public_key": ltca_kp.public.hex(),
        "pca_public_key": pca_kp.public.hex(),
        "ra_credential": ra_cred,
        "admin_credential": admin_cred,
        "clock": clock,
        "tls": {"ca": "tls/ca.pem", "obu_cert": "tls/obu.pem", "obu_key": "tls/obu.key",
                "ra_cert": "tls/ra.pem", "ra_key": "tls/ra.key"} if tls_enabled else None,
    }
    dump_json(ltca_cfg, out / "ltca.json")
    dump_json(pca_cfg, out / "pca.json")
    dump_json(client_cfg, out / "client.json")
    return out


def set_clock(deploy_dir, clock: dict) -> None:
    """Rewrite the clock of every config in ``deploy_dir``."""
    for name in ("ltca.json", "pca.json", "client.json"):
        path = Path(deploy_dir) / name
        cfg = load_json(path)
        cfg["clock"] = clock
        dump_json(cfg, path)


# -- services from config ----------------------------------------------------------

@dataclass
class ServerSpec:
    service: object
    clock: object
    host: str
    port: int
    ssl_context: object


def _listen(cfg: dict):
    host, _, port = cfg.get("listen", "127.0.0.1:0").rpartition(":")
    return host or "127.0.0.1", int(port)


def load_ltca(config_path) -> ServerSpec:
    path = Path(config_path)
    base = path.parent
    cfg = load_json(path)
    store = LtcaStore(_resolve(base, cfg["db"])) if cfg.get("db") else LtcaStore()
    service = Ltca(
        LtcaConfig(
            issuer_id=cfg["issuer_id"],
            skew_ms=int(cfg.get("skew_ms", 60_000)),
            grace_ms=int(cfg.get("grace_ms", 60_000)),
            max_window_ms=cfg.get("max_window_ms"),
            ra_credential=bytes.fromhex(cfg.get("ra_credential", "")),
            admin_credential=bytes.fromhex(cfg.get("admin_credential", "")),
        ),
        crypto.load_private_key(_resolve(base, cfg["signing_key"])),
        store,
    )
    ctx = None
    if cfg.get("tls"):
        t = cfg["tls"]
        ctx = tls.server_context(_resolve(base, t["cert"]), _resolve(base, t["key"]),
                                 _resolve(base, t.get("client_ca")))
    return ServerSpec(service, clock_from_config(cfg.get("clock")), *_listen(cfg), ctx)


def _trust_store(base: Path, value) -> dict:
    if isinstance(value, str):
        value = load_json(_resolve(base, value))
    return {name: bytes.fromhex(key) for name, key in value.items()}


def load_pca(config_path) -> ServerSpec:
    path = Path(config_path)
    base = path.parent
    cfg = load_json(path)
    store = PcaStore(_resolve(base, cfg["db"])) if cfg.get("db") else PcaStore()
    service = Pca(
        PcaConfig(
            pca_id=cfg["pca_id"],
            trust_store=_trust_store(base, cfg["trust_store"]),
            tau_p=int(cfg.get("tau_p_ms", 30_000)),
            gamma_p3=int(cfg.get("gamma_ms", 300_000)),
            t_date=int(cfg.get("t_date_ms", 0)),
            policy=PolicyKind.parse(cfg.get("policy", "p3")),
            skew_ms=int(cfg.get("skew_ms", 60_000)),
            ra_credential=bytes.fromhex(cfg.get("ra_credential", "")),
        ),
        crypto.load_private_key(_resolve(base, cfg["signing_key"])),
        store,
    )
    ctx = None
    if cfg.get("tls"):
        t = cfg["tls"]
        ctx = tls.server_context(_resolve(base, t["cert"]), _resolve(base, t["key"]))
    return ServerSpec(service, clock_from_config(cfg.get("clock")), *_listen(cfg), ctx)


# -- client side --------------------------------------------------------------------

@dataclass
class ClientConfig:
    ltca_public_key: bytes
    pca_public_key: bytes
    ra_credential: bytes
    admin_credential: bytes
    clock: dict
    ltca_ssl: object = None
    pca_ssl: object = None
    ra_ssl: object = None


def load_client(deploy_dir) -> ClientConfig:
    base = Path(deploy_dir)
    cfg = load_json(base / "client.json")
    out = ClientConfig(
        ltca_public_key=bytes.fromhex(cfg["ltca_public_key"]),
        pca_public_key=bytes.fromhex(cfg["pca_public_key"]),
        ra_credential=bytes.fromhex(cfg["ra_credential"]),
        admin_credential=bytes.fromhex(cfg["admin_credential"]),
        clock=cfg.get("clock") or {"kind": "system"},
    )
    t = cfg.get("tls")
    if t:
        ca = _resolve(base, t["ca"])
        out.ltca_ssl = tls.client_context(ca, _resolve(base, t["obu_cert"]), _resolve(base, t["obu_key"]))
        out.pca_ssl = tls.client_context(ca)
        out.ra_ssl = tls.client_context(ca, _resolve(base, t["ra_cert"]), _resolve(base, t["ra_key"]))
    return out


# -- server processes ------------------------------------------------------------------

class ServerProcess:
    """``vpki <role> serve`` in a child process; ``address`` is known once it prints READY."""

    def __init__(self, role: str, config_path, timeout: float = 30.0):
        self.role = role
        self.config_path = Path(config_path)
        env = dict(os.environ)
        src = str(Path(__file__).resolve().parent.parent)
        env["PYTHONPATH"] = src + os.pathsep + env.get("PYTHONPATH", "")
        self.proc = subprocess.Popen(
            [sys.executable, "-m", "vpki", role, "serve", "--config", str(self.config_path)],
            stdout=subprocess.PIPE, stderr=None, text=True, env=env,
        )
        self.host, self.port = self._wait_ready(timeout)

    def _wait_ready(self, timeout: float):
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            line = self.proc.stdout.readline()
            if not line:
                break
            parts = line.split()
            if len(parts) == 3 and parts[0] == "READY":
                return parts[1], int(parts[2])
        self.stop()
        raise RuntimeError(f"{self.role} server did not start (exit code {self.proc.poll()})")

    @property
    def address(self) -> str:
        return f"{self.host}:{self.port}"

    def transport(self, ssl_context=None, timeout: float = 60.0) -> TcpTransport:
        return TcpTransport(self.host, self.port, ssl_context, timeout=timeout)

    def stop(self) -> None:
        if self.proc.poll() is None:
            self.proc.terminate()
            try:
                self.proc.wait(10)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()
        if self.proc.stdout:
            self.proc.stdout.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.stop()


async def serve_forever(spec: ServerSpec, ready=print) -> None:
    """Serve until SIGTERM/SIGINT; announce ``READY host port`` once listening."""
    import asyncio
    import signal

    from .transport import bound_port, start_server

    server = await start_server(spec.service, spec.clock, spec.host, spec.port, spec.ssl_context)
    stop = asyncio.Event()
    loop = asyncio.get_running_loop()
    for sig in (signal.SIGTERM, signal.SIGINT):
        loop.add_signal_handler(sig, stop.set)
    ready(f"READY {spec.host} {bound_port(server)}", flush=True)
    try:
        await stop.wait()
    finally:
        server.close()
        await server.wait_closed()
        spec.service.store.close()
