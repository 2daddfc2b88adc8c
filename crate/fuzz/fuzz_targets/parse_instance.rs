//! Feeds arbitrary text through the instance-file parser; success or a
//! structured parse error are both fine, panics and runaway allocations
//! are findings. Accepted instances must satisfy their own contracts.

#![no_main]

use libfuzzer_sys::fuzz_target;
use sfm::oracle::formats::parse_instance;
use sfm::oracle::{MaskSet, Submodular};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(inst) = parse_instance(text) else { return };
    let n = inst.n();
    assert!(n >= 1);
    // Every accepted instance must evaluate finitely on a cheap probe.
    let probe = inst.eval(&MaskSet { n, mask: 1 });
    assert!(probe.is_finite());
    if inst.normalized() {
        assert_eq!(inst.eval(&MaskSet { n, mask: 0 }), 0.0);
    }
});
