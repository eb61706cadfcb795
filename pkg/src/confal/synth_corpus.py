"""Seeded synthetic corpora of redacted outbound email with planted anomalies.

Anomalies are driven by four independent latent factors: sending to an
address that looks like one's own, sensitive terms in subject/attachments,
attachment volume, and off-hours timing. None of them separates the classes
on its own. The generator also scores each record with its own naive-Bayes
evidence (equal class priors) and turns that into a difficulty in [0, 1].
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Sequence

import numpy as np
from scipy import stats

from .data_model import EmailRecord
from .featurize import ROLES, STATUSES, max_name_address_similarity

SECONDS_PER_DAY = 86_400
CORPUS_DAYS = 14
BUSINESS_HOURS = tuple(range(8, 19))
OFF_HOURS = tuple(range(0, 7)) + tuple(range(20, 24))
SIMILARITY_CONCENTRATION = 8.0
SIZE_LOG_SD = 1.0
COMPANY_DOMAIN = "corp.example.com"
PERSONAL_DOMAINS = ("gmail.com", "outlook.com", "yahoo.com", "proton.me")
EXTERNAL_DOMAINS = ("partner.example.org", "vendor.example.net", "client.example.com")

FIRST_NAMES = (
    "adam", "alice", "amir", "ana", "ben", "carla", "chen", "dana", "david", "elena", "emma", "farid",
    "grace", "hana", "ivan", "jack", "jane", "jorge", "julia", "kai", "kofi", "lena", "liam", "lucas",
    "maria", "mei", "noah", "nora", "omar", "priya", "raj", "rosa", "sam", "sara", "tariq", "theo",
    "uma", "victor", "wei", "yara", "yusuf", "zoe",
)
LAST_NAMES = (
    "abbott", "alvarez", "baker", "bennett", "chang", "costa", "dubois", "evans", "fischer", "garcia",
    "gupta", "haddad", "hansen", "ito", "jensen", "kaur", "khan", "kowalski", "larsen", "lee", "lopez",
    "mensah", "meyer", "morales", "nakamura", "nguyen", "novak", "okafor", "olsen", "patel", "petrov",
    "quinn", "rossi", "santos", "schmidt", "silva", "smith", "suzuki", "tanaka", "turner", "walsh",
    "wong", "yilmaz", "zhang",
)


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 0
    n_records: int = 32_000
    anomaly_rate: float = 0.04
    n_rounds: int = 8
    sensitive_term_rate_benign: float = 0.10
    sensitive_term_rate_anomalous: float = 0.30
    self_send_similarity_mean_anomalous: float = 0.85
    self_send_similarity_mean_benign: float = 0.65
    self_send_rate_benign: float = 0.03
    self_send_rate_anomalous: float = 0.45
    off_hours_rate_benign: float = 0.12
    off_hours_rate_anomalous: float = 0.35
    attachment_rate_benign: float = 0.7
    attachment_rate_anomalous: float = 1.2
    size_scale_benign: float = 200_000.0
    size_scale_anomalous: float = 700_000.0

    def __post_init__(self):
        if self.n_records <= 0:
            raise ValueError("n_records must be positive")
        if not 0.0 < self.anomaly_rate < 1.0:
            raise ValueError("anomaly_rate must lie in (0, 1)")
        if self.anomaly_rate >= 0.5:
            raise ValueError("anomaly_rate must be below 0.5 (the domain is imbalanced)")
        if self.n_rounds <= 0:
            raise ValueError("n_rounds must be positive")
        for name in ("sensitive_term_rate_benign", "sensitive_term_rate_anomalous", "self_send_rate_benign",
                     "self_send_rate_anomalous", "off_hours_rate_benign", "off_hours_rate_anomalous"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        for name in ("self_send_similarity_mean_anomalous", "self_send_similarity_mean_benign"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ValueError(f"{name} must lie in (0, 1)")
        for name in ("size_scale_benign", "size_scale_anomalous", "attachment_rate_benign",
                     "attachment_rate_anomalous"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "GeneratorConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown generator settings: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class DifficultyScore:
    instance_id: int
    difficulty: float

    def __post_init__(self):
        if not 0.0 <= self.difficulty <= 1.0:
            raise ValueError(f"difficulty must lie in [0, 1], got {self.difficulty}")


def difficulty_from_evidence(evidence: np.ndarray | float) -> np.ndarray | float:
    return 1.0 - np.abs(np.asarray(evidence) - 0.5) * 2.0


def _bernoulli_llr(flag: np.ndarray, p_anom: float, p_benign: float) -> np.ndarray:
    eps = 1e-12
    p_a = min(max(p_anom, eps), 1 - eps)
    p_b = min(max(p_benign, eps), 1 - eps)
    return np.where(flag, math.log(p_a / p_b), math.log((1 - p_a) / (1 - p_b)))


def _beta_params(mean: float) -> tuple[float, float]:
    return mean * SIMILARITY_CONCENTRATION, (1.0 - mean) * SIMILARITY_CONCENTRATION


def _mutate(local: str, target_similarity: float, rng: np.random.Generator) -> str:
    """Substitute letters so that the edit distance tracks ``target_similarity``."""
    chars = list(local)
    n_edits = min(len(chars), int(round((1.0 - target_similarity) * len(chars))))
    for pos in rng.choice(len(chars), size=n_edits, replace=False):
        options = [c for c in "abcdefghijklmnopqrstuvwxyz0123456789" if c != chars[pos]]
        chars[pos] = options[rng.integers(len(options))]
    return "".join(chars)


def generate_corpus(config: GeneratorConfig) -> tuple[list[EmailRecord], list[DifficultyScore]]:
    """Draw ``config.n_records`` records; deterministic given ``config.seed``."""
    cfg = config
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_records

    n_staff = max(40, n // 40)
    first = rng.choice(FIRST_NAMES, size=n_staff)
    last = rng.choice(LAST_NAMES, size=n_staff)
    usernames = [f"{f}.{l}{k}" if k else f"{f}.{l}" for k, (f, l) in
                 zip(_dedupe_counters(first, last), zip(first, last))]
    staff_role = rng.choice(len(ROLES), size=n_staff)
    staff_status = rng.choice(len(STATUSES), size=n_staff, p=(0.90, 0.07, 0.03))
    staff_tenure = rng.exponential(1500.0, size=n_staff).astype(np.int64)

    anomalous = rng.random(n) < cfg.anomaly_rate

    def by_class(benign: float, anom: float) -> np.ndarray:
        return np.where(anomalous, anom, benign)

    sender = rng.integers(n_staff, size=n)
    self_send = rng.random(n) < by_class(cfg.self_send_rate_benign, cfg.self_send_rate_anomalous)
    subject_sensitive = rng.random(n) < by_class(cfg.sensitive_term_rate_benign, cfg.sensitive_term_rate_anomalous)
    attachment_count = rng.poisson(by_class(cfg.attachment_rate_benign, cfg.attachment_rate_anomalous))
    attachment_sensitive = (attachment_count > 0) & (
        rng.random(n) < by_class(cfg.sensitive_term_rate_benign, cfg.sensitive_term_rate_anomalous))
    log_scale = np.log(by_class(cfg.size_scale_benign, cfg.size_scale_anomalous))
    per_attachment_log = rng.normal(log_scale, SIZE_LOG_SD)
    attachment_size = np.where(attachment_count > 0,
                               np.rint(attachment_count * np.exp(per_attachment_log)), 0).astype(np.int64)
    off_hours = rng.random(n) < by_class(cfg.off_hours_rate_benign, cfg.off_hours_rate_anomalous)
    hour = np.where(off_hours, rng.choice(OFF_HOURS, size=n), rng.choice(BUSINESS_HOURS, size=n))
    day = rng.integers(CORPUS_DAYS, size=n)
    timestamp = day * SECONDS_PER_DAY + hour * 3600 + rng.integers(3600, size=n)
    n_other = rng.poisson(0.7, size=n) + np.where(self_send, 0, 1)
    a_b, b_b = _beta_params(cfg.self_send_similarity_mean_benign)
    a_a, b_a = _beta_params(cfg.self_send_similarity_mean_anomalous)
    target_similarity = np.where(anomalous, rng.beta(a_a, b_a, size=n), rng.beta(a_b, b_b, size=n))

    llr = (
        _bernoulli_llr(self_send, cfg.self_send_rate_anomalous, cfg.self_send_rate_benign)
        + _bernoulli_llr(subject_sensitive, cfg.sensitive_term_rate_anomalous, cfg.sensitive_term_rate_benign)
        + _bernoulli_llr(off_hours, cfg.off_hours_rate_anomalous, cfg.off_hours_rate_benign)
        + attachment_count * math.log(cfg.attachment_rate_anomalous / cfg.attachment_rate_benign)
        - (cfg.attachment_rate_anomalous - cfg.attachment_rate_benign)
    )
    has_att = attachment_count > 0
    llr += np.where(has_att, _bernoulli_llr(
        attachment_sensitive, cfg.sensitive_term_rate_anomalous, cfg.sensitive_term_rate_benign), 0.0)
    mu_a, mu_b = math.log(cfg.size_scale_anomalous), math.log(cfg.size_scale_benign)
    llr += np.where(has_att, ((per_attachment_log - mu_b) ** 2 - (per_attachment_log - mu_a) ** 2)
                    / (2 * SIZE_LOG_SD ** 2), 0.0)
    llr += np.where(self_send, stats.beta.logpdf(target_similarity, a_a, b_a)
                    - stats.beta.logpdf(target_similarity, a_b, b_b), 0.0)
    evidence = 1.0 / (1.0 + np.exp(-llr))
    difficulty = np.clip(difficulty_from_evidence(evidence), 0.0, 1.0)

    records: list[EmailRecord] = []
    diffs: list[DifficultyScore] = []
    for i in range(n):
        s = int(sender[i])
        name = usernames[s]
        recipients = []
        if self_send[i]:
            local = _mutate(name.replace(".", ""), float(target_similarity[i]), rng)
            recipients.append(f"{local}@{PERSONAL_DOMAINS[rng.integers(len(PERSONAL_DOMAINS))]}")
        for _ in range(int(n_other[i])):
            if rng.random() < 0.6:
                other = usernames[int(rng.integers(n_staff))]
                recipients.append(f"{other}@{COMPANY_DOMAIN}")
            else:
                f, l = rng.choice(FIRST_NAMES), rng.choice(LAST_NAMES)
                recipients.append(f"{f}.{l}@{EXTERNAL_DOMAINS[rng.integers(len(EXTERNAL_DOMAINS))]}")
        # shuffle so the self address is not always first
        order = rng.permutation(len(recipients))
        recipients = tuple(recipients[k] for k in order)
        rid = i + 1
        records.append(EmailRecord(
            id=rid,
            timestamp=int(timestamp[i]),
            sender_name=name,
            sender_address=f"{name}@{COMPANY_DOMAIN}",
            recipient_addresses=recipients,
            recipient_count=len(recipients),
            subject_sensitive=bool(subject_sensitive[i]),
            attachment_sensitive=bool(attachment_sensitive[i]),
            attachment_count=int(attachment_count[i]),
            attachment_size=int(attachment_size[i]),
            hour_of_day=int(hour[i]),
            day_of_week=int(day[i] % 7),
            sender_role=ROLES[staff_role[s]],
            sender_tenure_days=int(staff_tenure[s]),
            sender_status=STATUSES[staff_status[s]],
            name_address_similarity=max_name_address_similarity(name, recipients),
            ground_truth=bool(anomalous[i]),
        ))
        diffs.append(DifficultyScore(rid, float(difficulty[i])))
    return records, diffs


def _dedupe_counters(first: np.ndarray, last: np.ndarray) -> list[int]:
    seen: dict[tuple[str, str], int] = {}
    out = []
    for key in zip(first, last):
        out.append(seen.get(key, 0))
        seen[key] = seen.get(key, 0) + 1
    return out


def partition_rounds(records: Sequence[EmailRecord], n_rounds: int, init_size: int, seed: int = 0):
    """Split into a uniform random initializer and time-ordered round pools.

    Returns ``(init_set, round_pools)``; pools are contiguous in
    ``(timestamp, id)`` order and differ in size by at most one record.
    """
    if n_rounds <= 0 or init_size <= 0:
        raise ValueError("n_rounds and init_size must be positive")
    if init_size + n_rounds > len(records):
        raise ValueError(
            f"insufficient records: {len(records)} cannot supply {init_size} initializer "
            f"records and {n_rounds} non-empty pools")
    rng = np.random.default_rng(seed)
    init_rows = set(rng.choice(len(records), size=init_size, replace=False).tolist())
    init_set = [records[i] for i in sorted(init_rows)]
    rest = sorted((r for i, r in enumerate(records) if i not in init_rows), key=lambda r: (r.timestamp, r.id))
    bounds = np.linspace(0, len(rest), n_rounds + 1).round().astype(int)
    pools = [rest[bounds[k]:bounds[k + 1]] for k in range(n_rounds)]
    return init_set, pools
