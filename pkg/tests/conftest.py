import asyncio
from dataclasses import dataclass, field

import pytest

from vpki import crypto
from vpki.clock import ManualClock
from vpki.ltca import Ltca, LtcaConfig
from vpki.model import subject_id_from_name
from vpki.obu import VehicleContext
from vpki.pca import Pca, PcaConfig
from vpki.policy import PolicyKind
from vpki.transport import LocalTransport

T_DATE = 1_467_676_800_000
MORNING = T_DATE + 8 * 3600_000
RA = b"ra-credential"
ADMIN = b"admin-credential"


@dataclass
class World:
    clock: ManualClock
    ltca: Ltca
    pca: Pca
    lt: LocalTransport
    pt: LocalTransport
    n: int = field(default=0)

    def vehicle(self, pool: int = 64, name: str | None = None) -> VehicleContext:
        self.n += 1
        kp = crypto.generate_keypair()
        ltc = self.ltca.register_vehicle(subject_id_from_name(name or f"veh{self.n}"), kp.public, T_DATE)
        ctx = VehicleContext(name or f"veh{self.n}", ltc, kp, self.pca.get_config(), self.ltca.public_key)
        ctx.fill_pool(pool)
        return ctx

    def run(self, coro):
        return asyncio.run(coro)


def make_world(policy=PolicyKind.P3, tau=30_000, gamma=300_000, skew=60_000, grace=60_000) -> World:
    clock = ManualClock(MORNING)
    ltca = Ltca(LtcaConfig("ltca-1", skew_ms=skew, grace_ms=grace, ra_credential=RA, admin_credential=ADMIN),
                crypto.generate_keypair())
    pca = Pca(PcaConfig("pca-1", {"ltca-1": ltca.public_key}, tau_p=tau, gamma_p3=gamma, t_date=T_DATE,
                        policy=policy, skew_ms=skew, ra_credential=RA), crypto.generate_keypair())
    return World(clock, ltca, pca, LocalTransport(ltca, clock), LocalTransport(pca, clock))


@pytest.fixture
def world():
    return make_world()


@pytest.fixture(params=[PolicyKind.P1, PolicyKind.P2, PolicyKind.P3], ids=lambda k: k.label)
def any_world(request):
    return make_world(request.param)
