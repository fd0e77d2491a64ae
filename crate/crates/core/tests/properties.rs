use std::sync::Arc;

use proptest::prelude::*;
use qforge::attacks::{build_fb_table, CiphertextTagOracle, OracleMode};
use qforge::cipher::{BlockCipher, EvenMansourCipher, KeyedCipher, Permutation};
use qforge::gf2n::FieldSpec;
use qforge::otr::{checksum, Blocks, OtrInstance, ProstOtrInstance};
use qforge::simon::{planted_period_table, recover_period, SimonSampler};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn spec(width: u32) -> FieldSpec {
    FieldSpec::with_default_poly(width).unwrap()
}

fn blocks(width: u32, raw: &[u32]) -> Blocks {
    let mask = (1u32 << width) - 1;
    Blocks::new(raw.iter().map(|x| x & mask).collect(), width).unwrap()
}

fn otr(key: u64, width: u32, nonce: u32) -> Option<OtrInstance> {
    let cipher = KeyedCipher::new(key, width).unwrap();
    OtrInstance::new(cipher, spec(width), nonce & ((1 << width) - 1)).ok()
}

proptest! {
    // about 10^4 cases for each of the 11 widths
    #![proptest_config(ProptestConfig::with_cases(110_000))]

    #[test]
    fn field_axioms(width in 6u32..=16, a: u32, b: u32, c: u32) {
        let f = spec(width);
        let m = f.mask();
        let (a, b, c) = (f.element(a & m).unwrap(), f.element(b & m).unwrap(), f.element(c & m).unwrap());
        prop_assert_eq!(a * b, b * a);
        prop_assert_eq!((a * b) * c, a * (b * c));
        prop_assert_eq!(a * (b + c), a * b + a * c);
        prop_assert_eq!(a + a, f.zero());
        prop_assert_eq!(a * f.one(), a);
        prop_assert_eq!(a.double(), a * f.constant(2));
        if !a.is_zero() {
            prop_assert_eq!(a * a.inv().unwrap(), f.one());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn otr_round_trip(width in 6u32..=10, key: u64, nonce: u32, raw in prop::collection::vec(any::<u32>(), 2..12)) {
        let Some(inst) = otr(key, width, nonce) else { return Ok(()) };
        let m = blocks(width, &raw);
        let ct = inst.encrypt(&m);
        prop_assert_eq!(inst.decrypt(&ct.blocks), m);
        prop_assert!(inst.verify(&ct));
        prop_assert_eq!(inst.tag_ciphertext(&ct.blocks), ct.tag);
        if matches!(raw.len(), 4 | 5) {
            prop_assert_eq!(inst.tag_from_ciphertext(&ct.blocks), ct.tag);
        }
    }

    #[test]
    fn otr_tag_is_a_function_of_the_checksum(key: u64, nonce: u32, raw in prop::collection::vec(any::<u32>(), 2..10), flip in 1u32..256) {
        let Some(inst) = otr(key, 8, nonce) else { return Ok(()) };
        let m = blocks(8, &raw);
        let mut v = m.as_slice().to_vec();
        // move a difference between two odd-indexed blocks: checksum unchanged
        if v.len() >= 4 {
            v[1] ^= flip;
            v[3] ^= flip;
            let m2 = Blocks::new(v, 8).unwrap();
            prop_assert_eq!(checksum(m2.as_slice()), checksum(m.as_slice()));
            prop_assert_eq!(inst.tag_plaintext(&m2), inst.tag_plaintext(&m));
        }
    }

    #[test]
    fn prost_round_trip(seed: u64, k1 in 0u32..256, k2 in 0u32..256, nonce in 0u32..256, raw in prop::collection::vec(any::<u32>(), 2..12)) {
        let perm = Arc::new(Permutation::random(seed, 8).unwrap());
        let em = EvenMansourCipher::new(k1, k2, perm.clone()).unwrap();
        prop_assert_eq!(em.decrypt(em.encrypt(nonce)), nonce);
        prop_assert_eq!(em.encrypt(nonce), k2 ^ perm.apply(nonce ^ k1));
        let Ok(inst) = ProstOtrInstance::new(em, spec(8), nonce) else { return Ok(()) };
        let m = blocks(8, &raw);
        let ct = inst.encrypt(&m);
        prop_assert_eq!(inst.decrypt(&ct.blocks), m);
        prop_assert!(inst.verify(&ct));
    }

    #[test]
    fn permutation_inverts(seed: u64, width in 6u32..=12, x: u32) {
        let p = Permutation::random(seed, width).unwrap();
        let x = x & ((1 << width) - 1);
        prop_assert_eq!(p.invert(p.apply(x)), x);
        prop_assert_eq!(p.apply(p.invert(x)), x);
    }

    #[test]
    fn simon_samples_are_orthogonal(seed: u64, width in 2u32..=10, s_raw: u32) {
        let s = (s_raw % ((1 << width) - 1)) + 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = planted_period_table(width, s, &mut rng).unwrap();
        prop_assert!(f.has_period(s));
        let mut sampler = SimonSampler::new(&f);
        for _ in 0..50 {
            prop_assert_eq!((sampler.sample(&mut rng) & s).count_ones() % 2, 0);
        }
        let res = recover_period(&f, &mut rng, 20 * width as usize);
        prop_assert_eq!(res.s, Some(s));
        prop_assert!(res.queries <= 20 * width as usize);
    }

    #[test]
    fn fb_table_matches_receiver_tags(key: u64, nonce: u32, raw in prop::collection::vec(any::<u32>(), 5..9)) {
        let Some(inst) = otr(key, 8, nonce) else { return Ok(()) };
        let ct = inst.encrypt(&blocks(8, &raw));
        let oracle = CiphertextTagOracle::new(&inst, OracleMode::CiphertextInput);
        let f = build_fb_table(&ct, &oracle).unwrap();
        let x = ct.blocks.at(2);
        prop_assert_eq!(f.eval(x), ct.tag);
        let mut v = ct.blocks.as_slice().to_vec();
        v[1] ^= 0x5a;
        v[3] ^= 0x5a;
        prop_assert_eq!(f.eval(x ^ 0x5a), inst.tag_ciphertext(&Blocks::new(v, 8).unwrap()));
    }
}
