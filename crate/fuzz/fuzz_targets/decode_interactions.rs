#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| nrpa_core::fuzz_harness::decode_interactions_target(data));
