//! Drives the generator mini-language with arbitrary specs and seeds.
//! The first 8 bytes pick the seed, the rest is the spec text. Accepted
//! specs must synthesize deterministically.

#![no_main]

use libfuzzer_sys::fuzz_target;
use sfm::oracle::Submodular;
use sfm_cli::genspec::parse_genspec;

fuzz_target!(|data: &[u8]| {
    if data.len() < 8 {
        return;
    }
    let (seed_bytes, rest) = data.split_at(8);
    let seed = u64::from_le_bytes(seed_bytes.try_into().unwrap());
    let Ok(spec) = std::str::from_utf8(rest) else { return };
    let Ok(inst) = parse_genspec(spec, seed) else { return };
    assert!(inst.n() >= 1);
    let again = parse_genspec(spec, seed).expect("same spec and seed must parse again");
    assert_eq!(inst.n(), again.n());
    if let (Some(a), Some(b)) = (inst.as_cut(), again.as_cut()) {
        assert!(a.edges().eq(b.edges()));
    }
});
