#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = hopc::io::codebook::codebook_from_bytes(data);
});
