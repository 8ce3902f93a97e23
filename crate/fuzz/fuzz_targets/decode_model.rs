#![no_main]

use libfuzzer_sys::fuzz_target;
use soilvwc::dataset::Matrix;
use soilvwc::models::{decode_model, encode_model};

fuzz_target!(|data: &[u8]| {
    if let Ok(model) = decode_model(data) {
        // anything accepted must be usable and re-encodable
        let x = Matrix::zeros(2, model.n_features());
        let _ = model.predict(&x);
        let again = decode_model(encode_model(&model).as_bytes()).expect("re-encoded model rejected");
        assert_eq!(again.n_features(), model.n_features());
    }
});
