//! Simon-based forgeries against OTR and Prost-OTR-Even-Mansour.
//!
//! Attack code sees the victim only through [`CiphertextTagOracle`] and
//! [`ProstTagOracle`]. Superposition queries are modelled by evaluating the
//! oracle on every input to build a truth table; the attacks then spend Simon
//! samples on that table and count only those.
//!
//! The OTR forgery (`forge_otr`) varies ciphertext positions 2 and 4:
//!
//! ```text
//! f_b(x) = Tag(C[1] || x || C[3] || x ^ tau || C[5..])     tau = C[2] ^ C[4]
//! ```
//!
//! `f_b` has period `s = tau ^ 12·delta ^ mu1 ^ mu2` with
//! `mu1 = E(5·delta ^ C[1])` and `mu2 = E(9·delta ^ C[3])`. Since
//! `f_b(C[2] ^ s) = f_b(C[2]) = T`, the ciphertext
//! `C[1] || s ^ C[2] || C[3] || s ^ C[4] || C[5..]` carries the intercepted tag.
//!
//! The Prost forgery recovers `L` from the period `c ^ 10·L` of
//! `Tag(M1 || x) ^ Tag(M1' || x || M3' || c)`, then `k1` from the period of
//! `Tag(M1 || x ^ 16·L) ^ P(x)`, and finally `k2 = P(x ^ k1) ^ Tag(M1 || x ^ 16·L)`.

use std::sync::Arc;

use rand::Rng;

use crate::cipher::{EvenMansourCipher, Permutation};
use crate::error::{Error, Result};
use crate::gf2n::{FieldElement, FieldSpec};
use crate::otr::{tag_coefficient, Blocks, OtrInstance, ProstOtrInstance, TaggedCiphertext};
use crate::simon::{recover_period, BooleanFunctionTable, PeriodResult, VERIFY_CHECKS};

/// How the OTR tag oracle interprets its input blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleMode {
    /// Input is a ciphertext; the answer is the tag that authenticates it.
    CiphertextInput,
    /// Input is a plaintext; the answer is its tag.
    PlaintextInput,
}

/// Tag oracle on an OTR session, plus the receiver's accept/reject decision.
pub struct CiphertextTagOracle<'a> {
    inst: &'a OtrInstance,
    mode: OracleMode,
}

impl<'a> CiphertextTagOracle<'a> {
    pub fn new(inst: &'a OtrInstance, mode: OracleMode) -> Self {
        Self { inst, mode }
    }

    pub fn mode(&self) -> OracleMode {
        self.mode
    }

    pub fn width(&self) -> u32 {
        self.inst.width()
    }

    pub fn tag(&self, blocks: &Blocks) -> u32 {
        match self.mode {
            OracleMode::CiphertextInput => self.inst.tag_ciphertext(blocks),
            OracleMode::PlaintextInput => self.inst.tag_plaintext(blocks),
        }
    }

    /// The genuine receiver-side verification.
    pub fn verify(&self, ct: &TaggedCiphertext) -> bool {
        self.inst.verify(ct)
    }
}

/// Plaintext-input tag oracle on a Prost-OTR-Even-Mansour session. The field,
/// nonce and permutation are public.
pub struct ProstTagOracle<'a> {
    inst: &'a ProstOtrInstance,
}

impl<'a> ProstTagOracle<'a> {
    pub fn new(inst: &'a ProstOtrInstance) -> Self {
        Self { inst }
    }

    pub fn width(&self) -> u32 {
        self.inst.width()
    }

    pub fn spec(&self) -> FieldSpec {
        self.inst.spec()
    }

    pub fn nonce(&self) -> u32 {
        self.inst.nonce()
    }

    pub fn public_permutation(&self) -> Arc<Permutation> {
        self.inst.cipher().permutation().clone()
    }

    pub fn tag(&self, m: &Blocks) -> u32 {
        self.inst.encrypt(m).tag
    }

    pub fn encrypt(&self, m: &Blocks) -> TaggedCiphertext {
        self.inst.encrypt(m)
    }
}

/// Query budget and retry policy shared by the attacks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttackParams {
    /// Simon samples per period recovery are capped at `ceil(c_factor * n)`.
    pub c_factor: f64,
    /// Extra attempts after a failed period recovery.
    pub retries: usize,
}

impl Default for AttackParams {
    fn default() -> Self {
        Self { c_factor: 4.0, retries: 3 }
    }
}

impl AttackParams {
    pub fn budget(&self, width: u32) -> usize {
        (self.c_factor * width as f64).ceil() as usize
    }
}

/// Result of an OTR ciphertext forgery.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForgeryOutcome {
    pub original: TaggedCiphertext,
    pub forged: Blocks,
    pub period: Option<u32>,
    /// Simon samples over all attempts.
    pub queries: usize,
    pub attempts: usize,
    /// The tag function was constant, so every shift is a period.
    pub constant_function: bool,
    /// Genuine verifier accepted `(forged, original.tag)`.
    pub verified: bool,
    pub distinct: bool,
}

impl ForgeryOutcome {
    pub fn success(&self) -> bool {
        self.verified && self.distinct
    }

    pub fn forged_pair(&self) -> TaggedCiphertext {
        TaggedCiphertext { blocks: self.forged.clone(), tag: self.original.tag }
    }
}

fn with_positions(c: &Blocks, pos: [usize; 2], vals: [u32; 2]) -> Vec<u32> {
    let mut v = c.as_slice().to_vec();
    v[pos[0] - 1] = vals[0];
    v[pos[1] - 1] = vals[1];
    v
}

/// Tag of the template `C` with positions `pos` replaced by `x` and
/// `x ^ offset`, evaluated for every `x`.
fn two_position_table(
    ct: &TaggedCiphertext,
    oracle: &CiphertextTagOracle<'_>,
    pos: [usize; 2],
    offset: u32,
) -> Result<BooleanFunctionTable> {
    let width = oracle.width();
    let mut buf = ct.blocks.as_slice().to_vec();
    BooleanFunctionTable::from_fn(width, |x| {
        buf[pos[0] - 1] = x;
        buf[pos[1] - 1] = x ^ offset;
        oracle.tag(&Blocks::new(buf.clone(), width).expect("template blocks are in range"))
    })
}

fn require_ciphertext_mode(oracle: &CiphertextTagOracle<'_>) -> Result<()> {
    match oracle.mode() {
        OracleMode::CiphertextInput => Ok(()),
        OracleMode::PlaintextInput => Err(Error::WrongOracleMode),
    }
}

/// Tag as a function of ciphertext positions 2 and 4 (offset `C[2] ^ C[4]`).
pub fn build_fb_table(
    ct: &TaggedCiphertext,
    oracle: &CiphertextTagOracle<'_>,
) -> Result<BooleanFunctionTable> {
    let d = ct.blocks.len();
    if d < 5 {
        return Err(Error::WrongBlockCount { expected: "at least 5", got: d });
    }
    require_ciphertext_mode(oracle)?;
    let tau = ct.blocks.at(2) ^ ct.blocks.at(4);
    two_position_table(ct, oracle, [2, 4], tau)
}

/// Tag as a function of ciphertext positions 1 and 3 (offset `C[1] ^ C[3]`).
pub fn build_fa_table(
    ct: &TaggedCiphertext,
    oracle: &CiphertextTagOracle<'_>,
) -> Result<BooleanFunctionTable> {
    let d = ct.blocks.len();
    if d < 5 {
        return Err(Error::WrongBlockCount { expected: "at least 5", got: d });
    }
    require_ciphertext_mode(oracle)?;
    let theta = ct.blocks.at(1) ^ ct.blocks.at(3);
    two_position_table(ct, oracle, [1, 3], theta)
}

/// Tag as a function of positions 2 and 3 of a 4-block ciphertext.
pub fn build_fd4_table(
    ct: &TaggedCiphertext,
    oracle: &CiphertextTagOracle<'_>,
) -> Result<BooleanFunctionTable> {
    let d = ct.blocks.len();
    if d != 4 {
        return Err(Error::WrongBlockCount { expected: "exactly 4", got: d });
    }
    require_ciphertext_mode(oracle)?;
    let gamma = ct.blocks.at(2) ^ ct.blocks.at(3);
    two_position_table(ct, oracle, [2, 3], gamma)
}

/// Classical spot check that `f` looks constant.
fn looks_constant<R: Rng + ?Sized>(f: &BooleanFunctionTable, rng: &mut R) -> bool {
    let size = 1u32 << f.width();
    let v = f.eval(rng.gen_range(0..size));
    (0..VERIFY_CHECKS).all(|_| f.eval(rng.gen_range(0..size)) == v)
}

struct PeriodSearch {
    period: Option<u32>,
    queries: usize,
    attempts: usize,
    constant: bool,
}

/// Runs `recover_period` up to `1 + retries` times on a fixed table. A table
/// whose samples are all zero and which passes the constancy check is
/// reported as constant instead of failed.
fn search_fixed_table<R: Rng + ?Sized>(
    f: &BooleanFunctionTable,
    rng: &mut R,
    params: &AttackParams,
) -> PeriodSearch {
    let budget = params.budget(f.width());
    let mut queries = 0;
    for attempt in 1..=params.retries + 1 {
        let res: PeriodResult = recover_period(f, rng, budget);
        queries += res.queries;
        if res.verified {
            return PeriodSearch { period: res.s, queries, attempts: attempt, constant: false };
        }
        if res.rank == 0 && looks_constant(f, rng) {
            return PeriodSearch { period: None, queries, attempts: attempt, constant: true };
        }
    }
    PeriodSearch { period: None, queries, attempts: params.retries + 1, constant: false }
}

fn forge_two_positions<R: Rng + ?Sized>(
    ct: &TaggedCiphertext,
    oracle: &CiphertextTagOracle<'_>,
    f: &BooleanFunctionTable,
    pos: [usize; 2],
    rng: &mut R,
    params: &AttackParams,
) -> ForgeryOutcome {
    let search = search_fixed_table(f, rng, params);
    // a constant tag function accepts any shift; use the lowest one
    let shift = if search.constant { Some(1) } else { search.period };
    let (forged, verified, distinct) = match shift {
        Some(s) => {
            let c = &ct.blocks;
            let vals = [c.at(pos[0]) ^ s, c.at(pos[1]) ^ s];
            let forged = Blocks::new(with_positions(c, pos, vals), oracle.width())
                .expect("shifted blocks stay in range");
            let verified =
                oracle.verify(&TaggedCiphertext { blocks: forged.clone(), tag: ct.tag });
            (forged, verified, s != 0)
        }
        None => (ct.blocks.clone(), false, false),
    };
    ForgeryOutcome {
        original: ct.clone(),
        forged,
        period: shift,
        queries: search.queries,
        attempts: search.attempts,
        constant_function: search.constant,
        verified,
        distinct,
    }
}

/// Existential forgery for `d >= 5`: finds the period of `f_b` and shifts
/// ciphertext positions 2 and 4 by it.
pub fn forge_otr<R: Rng + ?Sized>(
    ct: &TaggedCiphertext,
    oracle: &CiphertextTagOracle<'_>,
    rng: &mut R,
    params: &AttackParams,
) -> Result<ForgeryOutcome> {
    let f = build_fb_table(ct, oracle)?;
    Ok(forge_two_positions(ct, oracle, &f, [2, 4], rng, params))
}

/// Existential forgery for `d = 4`, where the mirrored final pair puts the
/// checksum dependence on positions 2 and 3.
pub fn forge_otr_d4<R: Rng + ?Sized>(
    ct: &TaggedCiphertext,
    oracle: &CiphertextTagOracle<'_>,
    rng: &mut R,
    params: &AttackParams,
) -> Result<ForgeryOutcome> {
    let f = build_fd4_table(ct, oracle)?;
    Ok(forge_two_positions(ct, oracle, &f, [2, 3], rng, params))
}

/// The forgery with fixed constants swapping odd positions,
/// `13δ^C[3] || 12δ^C[4] || 13δ^C[1] || 12δ^C[2] || C[5..]`. Needs the
/// secret `delta`, so it is only usable for adjudication against ground truth.
pub fn constant_swap_forgery(c: &Blocks, delta: FieldElement) -> Result<Blocks> {
    let d = c.len();
    if d < 5 {
        return Err(Error::WrongBlockCount { expected: "at least 5", got: d });
    }
    let spec = delta.spec();
    let k13 = (spec.constant(13) * delta).value();
    let k12 = (spec.constant(12) * delta).value();
    let mut v = c.as_slice().to_vec();
    v[0] = k13 ^ c.at(3);
    v[1] = k12 ^ c.at(4);
    v[2] = k13 ^ c.at(1);
    v[3] = k12 ^ c.at(2);
    Blocks::new(v, spec.width())
}

/// The 4-block analogue `13δ^C[4] || 12δ^C[3] || 12δ^C[2] || 13δ^C[1]`.
pub fn constant_swap_forgery_d4(c: &Blocks, delta: FieldElement) -> Result<Blocks> {
    if c.len() != 4 {
        return Err(Error::WrongBlockCount { expected: "exactly 4", got: c.len() });
    }
    let spec = delta.spec();
    let k13 = (spec.constant(13) * delta).value();
    let k12 = (spec.constant(12) * delta).value();
    let v = vec![k13 ^ c.at(4), k12 ^ c.at(3), k12 ^ c.at(2), k13 ^ c.at(1)];
    Blocks::new(v, spec.width())
}

/// Odd-position filler blocks for the Prost query families; they never enter
/// the checksum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fillers {
    pub short: u32,
    pub long_first: u32,
    pub long_third: u32,
}

impl Fillers {
    pub fn random<R: Rng + ?Sized>(width: u32, rng: &mut R) -> Self {
        let size = 1u32 << width;
        Self {
            short: rng.gen_range(0..size),
            long_first: rng.gen_range(0..size),
            long_third: rng.gen_range(0..size),
        }
    }
}

/// `f_c(x) = Tag(M1 || x) ^ Tag(M1' || x || M3' || c)`, period `c ^ 10·L`.
pub fn build_fc_table(
    oracle: &ProstTagOracle<'_>,
    c: u32,
    fillers: Fillers,
) -> Result<BooleanFunctionTable> {
    let width = oracle.width();
    oracle.spec().element(c)?;
    BooleanFunctionTable::from_fn(width, |x| {
        let short = Blocks::new(vec![fillers.short, x], width).expect("in range");
        let long =
            Blocks::new(vec![fillers.long_first, x, fillers.long_third, c], width).expect("in range");
        oracle.tag(&short) ^ oracle.tag(&long)
    })
}

/// `Tag(M1 || x ^ 16·L)`, i.e. `k2 ^ P(x ^ k1)` once `L` is right.
fn shifted_short_tag(oracle: &ProstTagOracle<'_>, l: FieldElement, filler: u32, x: u32) -> u32 {
    let offset = (tag_coefficient(oracle.spec(), 2) * l).value();
    let m = Blocks::new(vec![filler, x ^ offset], oracle.width()).expect("in range");
    oracle.tag(&m)
}

/// `f_d(x) = Tag(M1 || x ^ 16·L) ^ P(x)`, period `k1`.
pub fn build_fd_table(
    oracle: &ProstTagOracle<'_>,
    l: FieldElement,
    filler: u32,
) -> Result<BooleanFunctionTable> {
    let p = oracle.public_permutation();
    BooleanFunctionTable::from_fn(oracle.width(), |x| {
        shifted_short_tag(oracle, l, filler, x) ^ p.apply(x)
    })
}

/// Recovered `L` together with the evidence it came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LRecovery {
    pub l: FieldElement,
    /// Period of `f_c`.
    pub period: u32,
    /// The constant `c` used in the long query family.
    pub c: u32,
    pub queries: usize,
    pub attempts: usize,
}

/// Recovers `L = 10^-1 · (s ^ c)`. A constant `f_c` (when `c = 10·L`) or a
/// failed period search draws a fresh `c` and fresh fillers.
pub fn recover_l<R: Rng + ?Sized>(
    oracle: &ProstTagOracle<'_>,
    rng: &mut R,
    params: &AttackParams,
) -> Result<LRecovery> {
    search_l(oracle, rng, params).0
}

fn search_l<R: Rng + ?Sized>(
    oracle: &ProstTagOracle<'_>,
    rng: &mut R,
    params: &AttackParams,
) -> (Result<LRecovery>, usize) {
    let spec = oracle.spec();
    let width = oracle.width();
    let ten_inv = match spec.constant(10).inv() {
        Ok(v) => v,
        Err(e) => return (Err(e), 0),
    };
    let budget = params.budget(width);
    let mut queries = 0;
    for attempt in 1..=params.retries + 1 {
        let c = rng.gen_range(0..1u32 << width);
        let f = match build_fc_table(oracle, c, Fillers::random(width, rng)) {
            Ok(f) => f,
            Err(e) => return (Err(e), queries),
        };
        let res = recover_period(&f, rng, budget);
        queries += res.queries;
        if let Some(s) = res.s {
            let l = ten_inv * spec.constant((s ^ c) as u64);
            if !l.is_zero() {
                return (Ok(LRecovery { l, period: s, c, queries, attempts: attempt }), queries);
            }
        }
    }
    (Err(Error::PeriodNotFound("f_c")), queries)
}

/// Recovers `k1` as the period of `f_d`. A constant `f_d` means `k1 = 0`.
/// Returns the key and the Simon samples spent.
pub fn recover_k1<R: Rng + ?Sized>(
    oracle: &ProstTagOracle<'_>,
    l: FieldElement,
    rng: &mut R,
    params: &AttackParams,
) -> Result<(u32, usize)> {
    let (k1, queries) = search_k1(oracle, l, rng, params)?;
    Ok((k1.ok_or(Error::PeriodNotFound("f_d"))?, queries))
}

fn search_k1<R: Rng + ?Sized>(
    oracle: &ProstTagOracle<'_>,
    l: FieldElement,
    rng: &mut R,
    params: &AttackParams,
) -> Result<(Option<u32>, usize)> {
    let filler = rng.gen_range(0..1u32 << oracle.width());
    let f = build_fd_table(oracle, l, filler)?;
    let search = search_fixed_table(&f, rng, params);
    let k1 = match (search.period, search.constant) {
        (Some(k1), _) => Some(k1),
        (None, true) => Some(0),
        (None, false) => None,
    };
    Ok((k1, search.queries))
}

/// `k2 = P(x ^ k1) ^ Tag(M1 || x ^ 16·L)` from one classical query.
pub fn recover_k2<R: Rng + ?Sized>(
    oracle: &ProstTagOracle<'_>,
    l: FieldElement,
    k1: u32,
    rng: &mut R,
) -> u32 {
    let size = 1u32 << oracle.width();
    let (x, filler) = (rng.gen_range(0..size), rng.gen_range(0..size));
    oracle.public_permutation().apply(x ^ k1) ^ shifted_short_tag(oracle, l, filler, x)
}

/// Everything the Prost attack learned. Missing fields mean the stage that
/// produces them failed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProstKeyRecovery {
    pub spec: FieldSpec,
    pub l: Option<LRecovery>,
    pub k1: Option<u32>,
    pub k2: Option<u32>,
    /// Simon samples over both period recoveries and all attempts.
    pub queries: usize,
}

impl ProstKeyRecovery {
    pub fn is_complete(&self) -> bool {
        self.l.is_some() && self.k1.is_some() && self.k2.is_some()
    }

    /// Ground-truth comparison; only for harnesses and tests.
    pub fn is_exact_for(&self, inst: &ProstOtrInstance) -> bool {
        self.l.map(|r| r.l) == Some(inst.l())
            && self.k1 == Some(inst.cipher().k1())
            && self.k2 == Some(inst.cipher().k2())
    }
}

/// Full key recovery against a Prost-OTR-Even-Mansour session.
pub fn recover_prost_keys<R: Rng + ?Sized>(
    oracle: &ProstTagOracle<'_>,
    rng: &mut R,
    params: &AttackParams,
) -> ProstKeyRecovery {
    let mut rec =
        ProstKeyRecovery { spec: oracle.spec(), l: None, k1: None, k2: None, queries: 0 };
    let (l, queries) = search_l(oracle, rng, params);
    rec.queries += queries;
    let Ok(l) = l else { return rec };
    rec.l = Some(l);
    if let Ok((k1, queries)) = search_k1(oracle, l.l, rng, params) {
        rec.queries += queries;
        rec.k1 = k1;
        rec.k2 = k1.map(|k1| recover_k2(oracle, l.l, k1, rng));
    }
    rec
}

/// Encrypts and tags an arbitrary message under the recovered keys, with no
/// access to the victim session.
pub fn universal_forge(
    m: &Blocks,
    nonce: u32,
    rec: &ProstKeyRecovery,
    p: Arc<Permutation>,
) -> Result<TaggedCiphertext> {
    let (Some(k1), Some(k2)) = (rec.k1, rec.k2) else {
        return Err(Error::IncompleteRecovery);
    };
    if rec.l.is_none() {
        return Err(Error::IncompleteRecovery);
    }
    let em = EvenMansourCipher::new(k1, k2, p)?;
    let inst = ProstOtrInstance::new(em, rec.spec, nonce)?;
    Ok(inst.encrypt(m))
}

/// Convenience for experiment drivers: one intercepted message, one forgery.
pub fn intercept_and_forge<R: Rng + ?Sized>(
    inst: &OtrInstance,
    m: &Blocks,
    rng: &mut R,
    params: &AttackParams,
) -> Result<ForgeryOutcome> {
    let ct = inst.encrypt(m);
    let oracle = CiphertextTagOracle::new(inst, OracleMode::CiphertextInput);
    if m.len() == 4 {
        forge_otr_d4(&ct, &oracle, rng, params)
    } else {
        forge_otr(&ct, &oracle, rng, params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cipher::{BlockCipher, KeyedCipher};
    use crate::simon::brute_force_periods;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn otr(key: u64) -> OtrInstance {
        let spec = FieldSpec::default();
        let e = KeyedCipher::new(key, 8).unwrap();
        (0..256).find_map(|n| OtrInstance::new(e.clone(), spec, n).ok()).unwrap()
    }

    fn prost(seed: u64, k1: u32, k2: u32) -> ProstOtrInstance {
        let p = Arc::new(Permutation::random(seed, 8).unwrap());
        let em = EvenMansourCipher::new(k1, k2, p).unwrap();
        (0..256).find_map(|n| ProstOtrInstance::new(em.clone(), FieldSpec::default(), n).ok()).unwrap()
    }

    fn msg(rng: &mut ChaCha8Rng, d: usize) -> Blocks {
        Blocks::new((0..d).map(|_| rng.gen_range(0..256)).collect(), 8).unwrap()
    }

    #[test]
    fn fb_reproduces_intercepted_tag_and_has_predicted_period() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let inst = otr(17);
        let oracle = CiphertextTagOracle::new(&inst, OracleMode::CiphertextInput);
        let ct = inst.encrypt(&msg(&mut rng, 5));
        let f = build_fb_table(&ct, &oracle).unwrap();
        assert_eq!(f.eval(ct.blocks.at(2)), ct.tag);
        let e = |x| inst.cipher().encrypt(x);
        let k = |v| (inst.spec().constant(v) * inst.delta()).value();
        let s = ct.blocks.at(2) ^ ct.blocks.at(4) ^ k(12)
            ^ e(k(5) ^ ct.blocks.at(1))
            ^ e(k(9) ^ ct.blocks.at(3));
        assert_eq!(brute_force_periods(&f), BTreeSet::from([s]));
    }

    #[test]
    fn wrong_lengths_are_rejected() {
        let inst = otr(3);
        let oracle = CiphertextTagOracle::new(&inst, OracleMode::CiphertextInput);
        let ct4 = inst.encrypt(&Blocks::new(vec![1, 2, 3, 4], 8).unwrap());
        let ct5 = inst.encrypt(&Blocks::new(vec![1, 2, 3, 4, 5], 8).unwrap());
        assert!(build_fb_table(&ct4, &oracle).is_err());
        assert!(build_fa_table(&ct4, &oracle).is_err());
        assert!(build_fd4_table(&ct5, &oracle).is_err());
        let plain = CiphertextTagOracle::new(&inst, OracleMode::PlaintextInput);
        assert!(build_fb_table(&ct5, &plain).is_err());
    }

    #[test]
    fn forgery_verifies_and_differs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let params = AttackParams::default();
        for key in 0..10 {
            let inst = otr(key);
            for d in [4, 5, 6, 7] {
                let out = intercept_and_forge(&inst, &msg(&mut rng, d), &mut rng, &params).unwrap();
                assert!(out.success(), "key {key} d {d}: {out:?}");
                assert_ne!(out.forged, out.original.blocks);
                assert!(inst.verify(&out.forged_pair()));
                assert!(out.queries <= out.attempts * params.budget(8));
            }
        }
    }

    #[test]
    fn d4_with_equal_middle_blocks() {
        let inst = otr(5);
        let oracle = CiphertextTagOracle::new(&inst, OracleMode::CiphertextInput);
        let ct = TaggedCiphertext { blocks: Blocks::new(vec![9, 77, 77, 3], 8).unwrap(), tag: 0 };
        let ct = TaggedCiphertext { tag: inst.tag_ciphertext(&ct.blocks), ..ct };
        let f = build_fd4_table(&ct, &oracle).unwrap();
        assert_eq!(f.eval(77), ct.tag);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = forge_otr_d4(&ct, &oracle, &mut rng, &AttackParams::default()).unwrap();
        assert_eq!(out.verified, out.period.is_some());
    }

    #[test]
    fn constant_tag_function_is_forged_with_any_shift() {
        // plant C[2] ^ C[4] = 12δ ^ mu1 ^ mu2 so that f_b collapses to a constant
        let inst = otr(21);
        let e = |x| inst.cipher().encrypt(x);
        let k = |v| (inst.spec().constant(v) * inst.delta()).value();
        let (c1, c2, c3, c5) = (10, 20, 30, 50);
        let c4 = c2 ^ k(12) ^ e(k(5) ^ c1) ^ e(k(9) ^ c3);
        let blocks = Blocks::new(vec![c1, c2, c3, c4, c5], 8).unwrap();
        let ct = TaggedCiphertext { tag: inst.tag_ciphertext(&blocks), blocks };
        let oracle = CiphertextTagOracle::new(&inst, OracleMode::CiphertextInput);
        assert!(build_fb_table(&ct, &oracle).unwrap().is_constant());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let out = forge_otr(&ct, &oracle, &mut rng, &AttackParams::default()).unwrap();
        assert!(out.constant_function);
        assert!(out.success());
    }

    #[test]
    fn fc_has_period_c_plus_10l_independent_of_fillers() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let inst = prost(1, 0x35, 0xc8);
        let oracle = ProstTagOracle::new(&inst);
        let ten_l = (inst.spec().constant(10) * inst.l()).value();
        let c = 0x4e;
        let f1 = build_fc_table(&oracle, c, Fillers::random(8, &mut rng)).unwrap();
        let f2 = build_fc_table(&oracle, c, Fillers::random(8, &mut rng)).unwrap();
        assert_eq!(f1, f2);
        assert_eq!(brute_force_periods(&f1), BTreeSet::from([c ^ ten_l]));
        // c = 10L makes f_c identically zero
        let f0 = build_fc_table(&oracle, ten_l, Fillers::random(8, &mut rng)).unwrap();
        assert!(f0.as_slice().iter().all(|&v| v == 0));
    }

    #[test]
    fn l_recovery_agrees_across_constants() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let inst = prost(2, 7, 9);
        let oracle = ProstTagOracle::new(&inst);
        let a = recover_l(&oracle, &mut rng, &AttackParams::default()).unwrap();
        let b = recover_l(&oracle, &mut rng, &AttackParams::default()).unwrap();
        assert_eq!(a.l, inst.l());
        assert_eq!(b.l, a.l);
        let spec = inst.spec();
        assert_eq!((spec.constant(10) * a.l).value(), a.period ^ a.c);
    }

    #[test]
    fn fd_period_is_k1_and_k2_follows() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let inst = prost(3, 0x91, 0x2f);
        let oracle = ProstTagOracle::new(&inst);
        let f = build_fd_table(&oracle, inst.l(), 0x44).unwrap();
        assert_eq!(brute_force_periods(&f), BTreeSet::from([0x91]));
        let (k1, _) = recover_k1(&oracle, inst.l(), &mut rng, &AttackParams::default()).unwrap();
        assert_eq!(k1, 0x91);
        assert_eq!(recover_k2(&oracle, inst.l(), k1, &mut rng), 0x2f);
    }

    #[test]
    fn zero_k1_is_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let inst = prost(4, 0, 0x66);
        let oracle = ProstTagOracle::new(&inst);
        let f = build_fd_table(&oracle, inst.l(), 1).unwrap();
        assert!(f.as_slice().iter().all(|&v| v == 0x66));
        let rec = recover_prost_keys(&oracle, &mut rng, &AttackParams::default());
        assert!(rec.is_exact_for(&inst));
    }

    #[test]
    fn universal_forgery_matches_victim() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let inst = prost(5, 0xde, 0xad);
        let oracle = ProstTagOracle::new(&inst);
        let rec = recover_prost_keys(&oracle, &mut rng, &AttackParams::default());
        assert!(rec.is_exact_for(&inst));
        for d in 2..=9 {
            let m = msg(&mut rng, d);
            let forged = universal_forge(&m, inst.nonce(), &rec, oracle.public_permutation()).unwrap();
            assert_eq!(forged, inst.encrypt(&m));
        }
    }

    #[test]
    fn incomplete_recovery_is_refused() {
        let rec = ProstKeyRecovery { spec: FieldSpec::default(), l: None, k1: None, k2: None, queries: 0 };
        let p = Arc::new(Permutation::random(0, 8).unwrap());
        let m = Blocks::new(vec![1, 2], 8).unwrap();
        assert_eq!(universal_forge(&m, 0, &rec, p), Err(Error::IncompleteRecovery));
    }
}
