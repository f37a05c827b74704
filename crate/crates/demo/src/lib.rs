//! Browser bindings for `www/index.html`.

use jacobi_hyperbolic::perron::{perron_indicator, PerronConfig};
use jacobi_hyperbolic::sieve::build_sieve;
use jacobi_hyperbolic::sums::hyperbola_method_sum;
use jacobi_hyperbolic::EqualWidthCover;
use wasm_bindgen::prelude::*;

/// Keeps the page responsive; the sieve alone is about 13 bytes per integer.
const MAX_T: f64 = 2e6;

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Equal-width cover of `{z < n ≤ T^δ, m > z, nm ≤ T}` as JSON.
#[wasm_bindgen]
pub fn cover_geometry(t: f64, z: f64, delta: f64) -> Result<String, JsValue> {
    if t > MAX_T {
        return Err(js_err("T too large for the demo"));
    }
    EqualWidthCover::new(t, z, delta)
        .map(|c| c.to_json())
        .map_err(js_err)
}

/// Truncated Perron indicator at `nm = 1..=nm_max`.
#[wasm_bindgen]
pub fn perron_curve(tau: f64, r: f64, nm_max: u32) -> Result<Vec<f64>, JsValue> {
    if nm_max == 0 || nm_max > 5000 || r > 1e4 {
        return Err(js_err("need 1 ≤ nm_max ≤ 5000 and R ≤ 10^4"));
    }
    let cfg = PerronConfig::new(tau, r);
    (1..=nm_max as u64)
        .map(|nm| perron_indicator(nm, &cfg))
        .collect::<Result<_, _>>()
        .map_err(js_err)
}

/// `[T₀, S(T₀)/T₀, T₁, S(T₁)/T₁, …]` at `steps` log-spaced `T ≤ t_max`,
/// where `S(T) = Σ_{odd nm ≤ T} (n/m)`.
#[wasm_bindgen]
pub fn asymptotic_ratios(t_max: f64, steps: u32) -> Result<Vec<f64>, JsValue> {
    if !(100.0..=MAX_T).contains(&t_max) || !(2..=200).contains(&steps) {
        return Err(js_err("need 100 ≤ t_max ≤ 2·10^6 and 2 ≤ steps ≤ 200"));
    }
    let table = build_sieve(t_max as u64, 1 << 16).map_err(js_err)?;
    let mut out = Vec::with_capacity(2 * steps as usize);
    let (lo, hi) = (100f64.ln(), t_max.ln());
    for i in 0..steps {
        let t = (lo + (hi - lo) * i as f64 / (steps - 1) as f64)
            .exp()
            .round();
        let s = hyperbola_method_sum(t, &table).map_err(js_err)?.total;
        out.push(t);
        out.push(s.to_complex().re / t);
    }
    Ok(out)
}

/// `6 ζ(2) / (7 ζ(3))`, the limit of `S(T)/T`.
#[wasm_bindgen]
pub fn asymptotic_constant() -> f64 {
    jacobi_hyperbolic::analysis::asymptotic_constant()
}
