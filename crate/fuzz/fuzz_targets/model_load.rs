#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = hopc::pipeline::TrainedModel::from_bytes(data);
});
