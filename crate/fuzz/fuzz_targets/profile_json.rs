#![no_main]

use libfuzzer_sys::fuzz_target;
use psl_core::profile::Profile;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(profile) = Profile::from_json(text) {
            // anything that parses must be safe to evaluate
            let _ = profile.rho(0.3);
            let _ = profile.rho_prime(-1.7);
            let _ = profile.running_integral(0.9);
            let _ = profile.total_integral();
            let _ = profile.peak_bound();
        }
    }
});
