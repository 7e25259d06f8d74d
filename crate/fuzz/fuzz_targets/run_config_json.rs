#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(config) = psl_cli::parse_config(text) {
            let normalized = config.normalized();
            // validation must decide without panicking, and anything it
            // accepts must build into a state
            if normalized.validate().is_ok() {
                normalized.build_state().expect("validated config must build");
                let _ = normalized.settings();
            }
        }
    }
});
