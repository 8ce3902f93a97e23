//! Model files: a single JSON object
//!
//! ```text
//! { "format": "soilvwc-model", "version": 1, "model": { spec, features, standardizer, params, ... } }
//! ```
//!
//! Floats are written in shortest round-trip form, so save -> load -> predict
//! is bit-exact.

use serde::{Deserialize, Serialize};

use super::{FittedModel, ModelError};

pub const CONTAINER_FORMAT: &str = "soilvwc-model";
pub const CONTAINER_VERSION: u32 = 1;

#[derive(Serialize)]
struct EnvelopeOut<'a> {
    format: &'a str,
    version: u32,
    model: &'a FittedModel,
}

#[derive(Deserialize)]
struct EnvelopeIn {
    format: String,
    version: u32,
    model: serde_json::Value,
}

pub fn encode_model(m: &FittedModel) -> String {
    let env = EnvelopeOut { format: CONTAINER_FORMAT, version: CONTAINER_VERSION, model: m };
    serde_json::to_string(&env).expect("model serialization is infallible")
}

pub fn decode_model(bytes: &[u8]) -> Result<FittedModel, ModelError> {
    let env: EnvelopeIn = serde_json::from_slice(bytes).map_err(|e| ModelError::Container(e.to_string()))?;
    if env.format != CONTAINER_FORMAT {
        return Err(ModelError::Container(format!("unknown format `{}`", env.format)));
    }
    if env.version != CONTAINER_VERSION {
        return Err(ModelError::Container(format!("unsupported version {}", env.version)));
    }
    let m: FittedModel = serde_json::from_value(env.model).map_err(|e| ModelError::Container(e.to_string()))?;
    check_consistent(&m)?;
    Ok(m)
}

/// Structural checks so a decoded model cannot panic at prediction time.
fn check_consistent(m: &FittedModel) -> Result<(), ModelError> {
    use super::ModelParams;
    let bad = |s: &str| Err(ModelError::Container(s.to_string()));
    let d = m.standardizer.dim();
    if m.standardizer.std.iter().any(|s| !(s.is_finite() && *s != 0.0)) {
        return bad("standardizer std must be finite and nonzero");
    }
    if m.standardizer.mean.len() != d || d == 0 {
        return bad("standardizer dimension");
    }
    if let Some(fs) = &m.features {
        if fs.len() != d {
            return bad("feature list does not match standardizer");
        }
    }
    if m.spec.family() != m.params.family() {
        return bad("spec and params disagree on family");
    }
    match &m.params {
        ModelParams::Svr(s) => {
            let sv = &s.support_vectors;
            if sv.rows().checked_mul(sv.cols()) != Some(sv.as_slice().len()) || s.dual_coef.len() != sv.rows() || (sv.rows() > 0 && sv.cols() != d) {
                return bad("svr shapes");
            }
        }
        ModelParams::RandomForest(f) => {
            if f.trees.is_empty() {
                return bad("forest has no trees");
            }
            for t in &f.trees {
                t.check(d).map_err(|e| ModelError::Container(e.to_string()))?;
            }
        }
        ModelParams::GradientBoosting(g) => {
            for t in &g.trees {
                t.check(d).map_err(|e| ModelError::Container(e.to_string()))?;
            }
        }
        ModelParams::Mlp(mm) => {
            let net = &mm.net;
            let mut n_in = d;
            for l in &net.hidden {
                let w = l.dense.n_out;
                if l.dense.n_in != n_in
                    || l.dense.w.len() != n_in * w
                    || l.dense.b.len() != w
                    || l.bn.gamma.len() != w
                    || l.bn.beta.len() != w
                    || l.bn.running_mean.len() != w
                    || l.bn.running_var.len() != w
                {
                    return bad("mlp layer shapes");
                }
                if l.bn.running_var.iter().any(|v| !(*v >= 0.0)) {
                    return bad("mlp running variance must be >= 0");
                }
                n_in = w;
            }
            if net.output.n_in != n_in || net.output.n_out != 1 || net.output.w.len() != n_in || net.output.b.len() != 1 {
                return bad("mlp output layer shape");
            }
        }
    }
    Ok(())
}
