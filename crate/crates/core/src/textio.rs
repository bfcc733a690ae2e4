//! Exact textual encodings shared by the dataset, checkpoint and report writers.

use crate::nn::{Activation, DenseLayer, Mlp};
use crate::numkit::Matrix;

/// IEEE-754 bit pattern as 16 lowercase hex digits.
pub fn f64_to_hex(v: f64) -> String {
    format!("{:016x}", v.to_bits())
}

pub fn hex_to_f64(s: &str) -> Option<f64> {
    if s.len() != 16 {
        return None;
    }
    u64::from_str_radix(s, 16).ok().map(f64::from_bits)
}

pub fn encode_hex_list(values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 17);
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&f64_to_hex(*v));
    }
    out
}

pub fn decode_hex_list(s: &str) -> Option<Vec<f64>> {
    if s.is_empty() {
        return Some(Vec::new());
    }
    s.split(',').map(hex_to_f64).collect()
}

/// Encodes layer shapes as `in x out : activation` joined by `;`, and all
/// parameters (weights then bias per layer) as one hex list.
pub fn encode_mlp(net: &Mlp) -> (String, String) {
    let shapes = net
        .layers()
        .iter()
        .map(|l| format!("{}x{}:{}", l.input_dim(), l.output_dim(), l.activation))
        .collect::<Vec<_>>()
        .join(";");
    let values: Vec<f64> = net.params().into_iter().flatten().copied().collect();
    (shapes, encode_hex_list(&values))
}

pub fn decode_mlp(shapes: &str, values: &str) -> Result<Mlp, String> {
    let values = decode_hex_list(values).ok_or("malformed hex parameter list")?;
    let mut cursor = 0;
    let mut layers = Vec::new();
    for spec in shapes.split(';') {
        let (dims, act) = spec.split_once(':').ok_or_else(|| format!("bad layer spec `{spec}`"))?;
        let (i, o) = dims.split_once('x').ok_or_else(|| format!("bad layer dims `{dims}`"))?;
        let i: usize = i.parse().map_err(|_| format!("bad layer dims `{dims}`"))?;
        let o: usize = o.parse().map_err(|_| format!("bad layer dims `{dims}`"))?;
        let act: Activation = act.parse()?;
        let need = i * o + o;
        if cursor + need > values.len() {
            return Err(format!("parameter list too short for layer `{spec}`"));
        }
        let w = Matrix::from_vec(i, o, values[cursor..cursor + i * o].to_vec()).map_err(|e| e.to_string())?;
        let b = values[cursor + i * o..cursor + need].to_vec();
        cursor += need;
        layers.push(DenseLayer::new(w, b, act).map_err(|e| e.to_string())?);
    }
    if cursor != values.len() {
        return Err(format!("{} trailing parameter values", values.len() - cursor));
    }
    Mlp::new(layers).map_err(|e| e.to_string())
}

/// Fixed-point rendering with six significant digits. Non-finite values
/// render as `inf`, `-inf` or `nan`.
pub fn fmt_sig6(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0.00000".into();
    }
    let mag = v.abs().log10().floor() as i32;
    let decimals = (5 - mag).clamp(0, 17) as usize;
    let s = format!("{v:.decimals$}");
    // -0.00000 after rounding a tiny negative value
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        return s[1..].to_string();
    }
    s
}
