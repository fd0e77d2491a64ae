//! Experiment driver behind the `qforge` binary: repeated attack trials, the
//! success-bound curve, and the self-test.
//!
//! Trial `i` of a run with master seed `S` draws everything from
//! `ChaCha8Rng::seed_from_u64(trial_seed(S, i))`, where `trial_seed` is one
//! SplitMix64 step applied to `S + i * 0x9E3779B97F4A7C15`. A trial can
//! therefore be replayed alone from `(S, i)`.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::attacks::{
    intercept_and_forge, recover_prost_keys, universal_forge, AttackParams, ProstTagOracle,
};
use crate::cipher::{BlockCipher, EvenMansourCipher, KeyedCipher, Permutation};
use crate::error::{Error, Result};
use crate::gf2n::FieldSpec;
use crate::otr::{Blocks, OtrInstance, ProstOtrInstance};
use crate::simon::{planted_period_table, prob_lower_bound, recover_period, SimonSampler};

pub const TRIAL_CSV_HEADER: &str = "trial,success,queries,period_hex,millis";
pub const CURVE_CSV_HEADER: &str = "n,c,bound,empirical";

/// Messages compared against the victim in each successful Prost trial.
pub const PROST_FORGE_CHECKS: usize = 100;

/// Widest block for which the curve runs live trials.
pub const CURVE_EMPIRICAL_MAX_WIDTH: u32 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttackKind {
    Otr,
    OtrD4,
    Prost,
    SimonDemo,
}

impl AttackKind {
    pub fn name(&self) -> &'static str {
        match self {
            AttackKind::Otr => "otr",
            AttackKind::OtrD4 => "otr-d4",
            AttackKind::Prost => "prost",
            AttackKind::SimonDemo => "simon-demo",
        }
    }
}

impl FromStr for AttackKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "otr" => Ok(AttackKind::Otr),
            "otr-d4" => Ok(AttackKind::OtrD4),
            "prost" => Ok(AttackKind::Prost),
            "simon-demo" => Ok(AttackKind::SimonDemo),
            other => Err(format!("unknown attack {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub attack: AttackKind,
    pub bits: u32,
    pub blocks: usize,
    pub trials: usize,
    pub c_factor: f64,
    pub seed: u64,
    pub poly: Option<u32>,
    pub retries: usize,
    /// Record wall-clock time per trial. Off by default so output files are a
    /// pure function of the configuration.
    pub timing: bool,
    /// Success rate below which the run counts as failed.
    pub min_rate: f64,
}

impl ExperimentConfig {
    pub fn new(attack: AttackKind) -> Self {
        let blocks = match attack {
            AttackKind::OtrD4 => 4,
            _ => 5,
        };
        Self {
            attack,
            bits: 8,
            blocks,
            trials: 100,
            c_factor: 4.0,
            seed: 1,
            poly: None,
            retries: 3,
            timing: false,
            min_rate: 0.95,
        }
    }

    pub fn field(&self) -> Result<FieldSpec> {
        match self.poly {
            Some(poly) => FieldSpec::new(self.bits, poly),
            None => FieldSpec::with_default_poly(self.bits),
        }
    }

    pub fn params(&self) -> AttackParams {
        AttackParams { c_factor: self.c_factor, retries: self.retries }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        self.field().map_err(|e| e.to_string())?;
        if self.trials == 0 {
            return Err("trials must be at least 1".into());
        }
        if !(self.c_factor > 0.0 && self.c_factor.is_finite()) {
            return Err("c must be a positive number".into());
        }
        match self.attack {
            AttackKind::Otr if self.blocks < 5 => {
                Err(format!("attack-otr needs at least 5 blocks, got {}", self.blocks))
            }
            AttackKind::OtrD4 if self.blocks != 4 => {
                Err(format!("attack-otr-d4 needs exactly 4 blocks, got {}", self.blocks))
            }
            _ => Ok(()),
        }
    }
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialRecord {
    pub trial: usize,
    pub success: bool,
    pub queries: usize,
    pub period_hex: String,
    pub millis: u64,
}

impl fmt::Display for TrialRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{}",
            self.trial, self.success as u8, self.queries, self.period_hex, self.millis
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSummary {
    pub records: Vec<TrialRecord>,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_queries: f64,
    pub max_queries: usize,
    pub bound: f64,
}

impl ExperimentSummary {
    fn from_records(records: Vec<TrialRecord>, bound: f64) -> Self {
        let successes = records.iter().filter(|r| r.success).count();
        let n = records.len().max(1) as f64;
        Self {
            successes,
            success_rate: successes as f64 / n,
            mean_queries: records.iter().map(|r| r.queries as f64).sum::<f64>() / n,
            max_queries: records.iter().map(|r| r.queries).max().unwrap_or(0),
            bound,
            records,
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{TRIAL_CSV_HEADER}")?;
        for r in &self.records {
            writeln!(w, "{r}")?;
        }
        Ok(())
    }
}

pub fn trial_seed(master: u64, index: usize) -> u64 {
    let mut z = master.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn hex(value: u32, width: u32) -> String {
    format!("{:0w$x}", value, w = width.div_ceil(4) as usize)
}

fn random_blocks<R: Rng + ?Sized>(rng: &mut R, d: usize, width: u32) -> Blocks {
    Blocks::new((0..d).map(|_| rng.gen_range(0..1u32 << width)).collect(), width)
        .expect("random blocks are in range")
}

/// A fresh OTR session; the nonce is stepped until the derived masks are
/// nonzero.
pub fn random_otr_instance<R: Rng + ?Sized>(spec: FieldSpec, rng: &mut R) -> Result<OtrInstance> {
    let cipher = KeyedCipher::new(rng.gen(), spec.width())?;
    let size = 1u32 << spec.width();
    let start = rng.gen_range(0..size);
    (0..size)
        .map(|i| (start + i) % size)
        .find_map(|n| OtrInstance::new(cipher.clone(), spec, n).ok())
        .ok_or(Error::DegenerateNonce(start))
}

/// A fresh Prost-OTR-Even-Mansour session with random keys and permutation.
pub fn random_prost_instance<R: Rng + ?Sized>(
    spec: FieldSpec,
    rng: &mut R,
) -> Result<ProstOtrInstance> {
    let width = spec.width();
    let size = 1u32 << width;
    let perm = Arc::new(Permutation::random(rng.gen(), width)?);
    let em = EvenMansourCipher::new(rng.gen_range(0..size), rng.gen_range(0..size), perm)?;
    let start = rng.gen_range(0..size);
    (0..size)
        .map(|i| (start + i) % size)
        .find_map(|n| ProstOtrInstance::new(em.clone(), spec, n).ok())
        .ok_or(Error::DegenerateNonce(start))
}

/// Outcome of one trial before timing is attached.
struct TrialResult {
    success: bool,
    queries: usize,
    period_hex: String,
}

fn otr_trial(cfg: &ExperimentConfig, spec: FieldSpec, rng: &mut ChaCha8Rng) -> Result<TrialResult> {
    let inst = random_otr_instance(spec, rng)?;
    let m = random_blocks(rng, cfg.blocks, spec.width());
    let out = intercept_and_forge(&inst, &m, rng, &cfg.params())?;
    Ok(TrialResult {
        success: out.success(),
        queries: out.queries,
        period_hex: out.period.map(|s| hex(s, spec.width())).unwrap_or_default(),
    })
}

fn prost_trial(
    cfg: &ExperimentConfig,
    spec: FieldSpec,
    rng: &mut ChaCha8Rng,
) -> Result<TrialResult> {
    let inst = random_prost_instance(spec, rng)?;
    let oracle = ProstTagOracle::new(&inst);
    let rec = recover_prost_keys(&oracle, rng, &cfg.params());
    let width = spec.width();
    let mut success = rec.is_exact_for(&inst);
    if success {
        for _ in 0..PROST_FORGE_CHECKS {
            let d = rng.gen_range(2..=9);
            let m = random_blocks(rng, d, width);
            let forged = universal_forge(&m, inst.nonce(), &rec, oracle.public_permutation())?;
            success &= forged == inst.encrypt(&m);
        }
    }
    let period_hex = match (rec.l, rec.k1) {
        (Some(l), Some(k1)) => format!("{}/{}", hex(l.period, width), hex(k1, width)),
        (Some(l), None) => hex(l.period, width),
        _ => String::new(),
    };
    Ok(TrialResult { success, queries: rec.queries, period_hex })
}

fn simon_trial(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<TrialResult> {
    let width = cfg.bits;
    let s = rng.gen_range(1..1u32 << width);
    let f = planted_period_table(width, s, rng)?;
    let res = recover_period(&f, rng, cfg.params().budget(width));
    Ok(TrialResult {
        success: res.s == Some(s),
        queries: res.queries,
        period_hex: res.s.map(|v| hex(v, width)).unwrap_or_default(),
    })
}

/// Runs trial `index` of `cfg` on its own derived seed.
pub fn run_trial(cfg: &ExperimentConfig, index: usize) -> Result<TrialRecord> {
    let spec = cfg.field()?;
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(cfg.seed, index));
    let start = Instant::now();
    let res = match cfg.attack {
        AttackKind::Otr | AttackKind::OtrD4 => otr_trial(cfg, spec, &mut rng)?,
        AttackKind::Prost => prost_trial(cfg, spec, &mut rng)?,
        AttackKind::SimonDemo => simon_trial(cfg, &mut rng)?,
    };
    let millis = if cfg.timing { start.elapsed().as_millis() as u64 } else { 0 };
    Ok(TrialRecord {
        trial: index,
        success: res.success,
        queries: res.queries,
        period_hex: res.period_hex,
        millis,
    })
}

/// Runs all trials in parallel; records come back ordered by trial index.
pub fn run_attack_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary> {
    let records = (0..cfg.trials)
        .into_par_iter()
        .map(|i| run_trial(cfg, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentSummary::from_records(records, prob_lower_bound(cfg.bits, cfg.c_factor)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurveRow {
    pub n: u32,
    pub c: f64,
    pub bound: f64,
    pub empirical: Option<f64>,
}

/// Empirical success of the `d = 5` OTR forgery with a single attempt of
/// `ceil(c * n)` Simon samples.
pub fn empirical_otr_rate(n: u32, c: f64, trials: usize, seed: u64) -> Result<f64> {
    let cfg = ExperimentConfig {
        bits: n,
        trials,
        c_factor: c,
        seed,
        retries: 0,
        ..ExperimentConfig::new(AttackKind::Otr)
    };
    Ok(run_attack_experiment(&cfg)?.success_rate)
}

/// Bound `1 - 2^n * 0.6454^(cn)` on the grid, with live OTR-forgery rates for
/// `n <= 10` when `trials > 0`.
pub fn run_prob_curve(n_list: &[u32], c_list: &[f64], trials: usize, seed: u64) -> Result<Vec<CurveRow>> {
    let mut rows = Vec::with_capacity(n_list.len() * c_list.len());
    for (i, &n) in n_list.iter().enumerate() {
        for (j, &c) in c_list.iter().enumerate() {
            let empirical = if trials > 0
                && (crate::gf2n::MIN_WIDTH..=CURVE_EMPIRICAL_MAX_WIDTH).contains(&n)
            {
                let cell_seed = trial_seed(seed, i * c_list.len() + j);
                Some(empirical_otr_rate(n, c, trials, cell_seed)?)
            } else {
                None
            };
            rows.push(CurveRow { n, c, bound: prob_lower_bound(n, c), empirical });
        }
    }
    Ok(rows)
}

pub fn write_curve_csv<W: Write>(rows: &[CurveRow], mut w: W) -> io::Result<()> {
    writeln!(w, "{CURVE_CSV_HEADER}")?;
    for r in rows {
        let empirical = r.empirical.map(|e| e.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{}", r.n, r.c, r.bound, empirical)?;
    }
    Ok(())
}

/// Result of one self-test check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Deliberate defects the self-test must catch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Mutation {
    /// Encrypt 4-block messages with this tag coefficient instead of 26.
    pub coeff4: Option<u32>,
}

pub const SELFTEST_CHECKS: [&str; 9] = [
    "field-axioms",
    "field-constants",
    "cipher-bijection",
    "otr-round-trip",
    "prost-round-trip",
    "otr-closed-form-d5",
    "otr-closed-form-d4",
    "prost-tag-d2-d4",
    "simon-orthogonality",
];

fn check(name: &'static str, result: std::result::Result<(), String>) -> CheckOutcome {
    match result {
        Ok(()) => CheckOutcome { name, passed: true, detail: String::new() },
        Err(detail) => CheckOutcome { name, passed: false, detail },
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Fast consistency checks over the whole stack, each listed once in
/// [`SELFTEST_CHECKS`] order.
pub fn selftest(mutation: Mutation) -> Vec<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f_7e57);
    let spec = FieldSpec::default();
    let width = spec.width();
    let size = 1u32 << width;
    let mut out = Vec::new();

    out.push(check("field-axioms", {
        let mut res = Ok(());
        for _ in 0..2000 {
            let [a, b, c] = [0; 3].map(|_| spec.constant(rng.gen_range(0..size) as u64));
            if a * (b * c) != (a * b) * c || a * b != b * a || a * (b + c) != a * b + a * c {
                res = Err(format!("axiom fails on {a}, {b}, {c}"));
                break;
            }
            if !a.is_zero() && a * a.inv().expect("nonzero") != spec.one() {
                res = Err(format!("inverse fails on {a}"));
                break;
            }
        }
        res
    }));

    out.push(check(
        "field-constants",
        ensure(spec.constant(16) + spec.constant(26) == spec.constant(10), || {
            "16 + 26 != 10".into()
        })
        .and_then(|_| {
            let coeff = spec.constant(3) * (spec.pow2(3) + spec.one()) + spec.one();
            ensure(coeff == spec.constant(26), || format!("3*(8+1)+1 = {coeff}"))
        }),
    ));

    out.push(check("cipher-bijection", {
        let e = KeyedCipher::new(rng.gen(), width).expect("width in range");
        let mut seen = vec![false; size as usize];
        let injective = (0..size).all(|x| !std::mem::replace(&mut seen[e.encrypt(x) as usize], true));
        ensure(injective && (0..size).all(|x| e.decrypt(e.encrypt(x)) == x), || {
            "keyed cipher is not a bijection".into()
        })
    }));

    let mut otr = random_otr_instance(spec, &mut rng).expect("some nonce works");
    if let Some(c) = mutation.coeff4 {
        otr = otr.with_tag_coefficient_override(4, c);
    }

    out.push(check("otr-round-trip", {
        let mut res = Ok(());
        for d in 2..=9 {
            for _ in 0..50 {
                let m = random_blocks(&mut rng, d, width);
                let ct = otr.encrypt(&m);
                if otr.decrypt(&ct.blocks) != m {
                    res = Err(format!("round trip fails at d = {d}"));
                }
            }
        }
        res
    }));

    out.push(check("prost-round-trip", {
        let inst = random_prost_instance(spec, &mut rng).expect("some nonce works");
        let mut res = Ok(());
        for d in 2..=9 {
            for _ in 0..50 {
                let m = random_blocks(&mut rng, d, width);
                let ct = inst.encrypt(&m);
                if inst.decrypt(&ct.blocks) != m || !inst.verify(&ct) {
                    res = Err(format!("round trip fails at d = {d}"));
                }
            }
        }
        res
    }));

    for (name, d) in [("otr-closed-form-d5", 5), ("otr-closed-form-d4", 4)] {
        let mut mismatches = 0;
        for _ in 0..200 {
            let ct = otr.encrypt(&random_blocks(&mut rng, d, width));
            if otr.tag_from_ciphertext(&ct.blocks) != ct.tag {
                mismatches += 1;
            }
        }
        out.push(check(name, ensure(mismatches == 0, || format!("{mismatches}/200 tags differ"))));
    }

    out.push(check("prost-tag-d2-d4", {
        let inst = random_prost_instance(spec, &mut rng).expect("some nonce works");
        let (k1, k2) = (inst.cipher().k1(), inst.cipher().k2());
        let p = inst.cipher().permutation().clone();
        let l16 = (spec.constant(16) * inst.l()).value();
        let l26 = (spec.constant(26) * inst.l()).value();
        let ok = (0..size).all(|x| {
            let c = x.rotate_left(3) & (size - 1);
            let t2 = inst.encrypt(&Blocks::new(vec![c, x], width).expect("in range")).tag;
            let t4 = inst.encrypt(&Blocks::new(vec![x, x, c, c], width).expect("in range")).tag;
            t2 == k2 ^ p.apply(x ^ l16 ^ k1) && t4 == k2 ^ p.apply(x ^ c ^ l26 ^ k1)
        });
        ensure(ok, || "tag differs from k2 ^ P(sigma ^ coeff*L ^ k1)".into())
    }));

    out.push(check("simon-orthogonality", {
        let s = rng.gen_range(1..size);
        let f = planted_period_table(width, s, &mut rng).expect("valid period");
        let mut sampler = SimonSampler::new(&f);
        let violations =
            (0..2000).filter(|_| (sampler.sample(&mut rng) & s).count_ones() % 2 == 1).count();
        ensure(violations == 0, || format!("{violations} samples not orthogonal to {s:#x}"))
    }));

    out
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_config_file(text: &str) -> std::result::Result<Vec<(String, String)>, String> {
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key=value", lineno + 1))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

/// Accepts decimal or `0x`-prefixed hexadecimal.
pub fn parse_u32(s: &str) -> std::result::Result<u32, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(h) => u32::from_str_radix(h, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("{s:?}: {e}"))
}
