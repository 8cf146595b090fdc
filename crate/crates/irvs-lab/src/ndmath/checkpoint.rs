//! Text checkpoint format for MLP parameters.
//!
//! Header lines carry the layer sizes, activation, spectral flag, and
//! an optional role tag. Values follow in layer order (weight rows,
//! bias, power-iteration vector, sigma), printed with 17 significant
//! digits so a write/read round trip is exact at the emitted precision.

use std::fmt::Write as _;
use std::path::Path;

use super::mlp::{Activation, Layer, MlpParams};
use super::matrix::Matrix;
use crate::error::{Error, Result};

pub fn format_f64(v: f64) -> String {
    format!("{:.16e}", v)
}

fn join(values: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{}", format_f64(*v));
    }
    s
}

pub fn save_mlp(params: &MlpParams, role: &str, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str("# irvs-lab mlp checkpoint v1\n");
    let _ = writeln!(out, "role {role}");
    let dims = params.dims();
    let _ = writeln!(
        out,
        "dims {}",
        dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(" ")
    );
    out.push_str("activation relu\n");
    let _ = writeln!(out, "spectral_norm {}", params.spectral_norm);
    for (k, layer) in params.layers.iter().enumerate() {
        let _ = writeln!(out, "layer {k}");
        for r in 0..layer.weight.rows() {
            out.push_str(&join(layer.weight.row(r)));
            out.push('\n');
        }
        out.push_str(&join(&layer.bias));
        out.push('\n');
        out.push_str(&join(&layer.u));
        out.push('\n');
        out.push_str(&format_f64(layer.sigma));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io("checkpoint write", e))
}

pub fn load_mlp(path: &Path) -> Result<(MlpParams, String)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io("checkpoint read", e))?;
    parse_mlp(&text)
}

fn parse_floats(line: &str, lineno: usize, expect: usize) -> Result<Vec<f64>> {
    let vals: Vec<f64> = line
        .split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::format(lineno, format!("bad float '{t}'")))
        })
        .collect::<Result<_>>()?;
    if vals.len() != expect {
        return Err(Error::format(
            lineno,
            format!("expected {expect} values, got {}", vals.len()),
        ));
    }
    Ok(vals)
}

pub fn parse_mlp(text: &str) -> Result<(MlpParams, String)> {
    let mut lines = text.lines().enumerate().peekable();
    let mut next_line = |what: &str| -> Result<(usize, &str)> {
        loop {
            match lines.next() {
                Some((n, l)) if l.starts_with('#') || l.trim().is_empty() => {
                    let _ = (n, l);
                }
                Some((n, l)) => return Ok((n + 1, l)),
                None => return Err(Error::format(0, format!("missing {what}"))),
            }
        }
    };

    let (n, role_line) = next_line("role")?;
    let role = role_line
        .strip_prefix("role ")
        .ok_or_else(|| Error::format(n, "expected 'role <tag>'"))?
        .to_string();
    let (n, dims_line) = next_line("dims")?;
    let dims: Vec<usize> = dims_line
        .strip_prefix("dims ")
        .ok_or_else(|| Error::format(n, "expected 'dims ...'"))?
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::format(n, "bad dim")))
        .collect::<Result<_>>()?;
    if dims.len() < 2 {
        return Err(Error::format(n, "need at least two dims"));
    }
    let (n, act_line) = next_line("activation")?;
    if act_line.trim() != "activation relu" {
        return Err(Error::format(n, "unsupported activation"));
    }
    let (n, sn_line) = next_line("spectral_norm")?;
    let spectral_norm = match sn_line.strip_prefix("spectral_norm ") {
        Some("true") => true,
        Some("false") => false,
        _ => return Err(Error::format(n, "expected 'spectral_norm true|false'")),
    };

    let mut layers = Vec::with_capacity(dims.len() - 1);
    for (k, w) in dims.windows(2).enumerate() {
        let (fan_in, fan_out) = (w[0], w[1]);
        let (n, tag) = next_line("layer tag")?;
        if tag.trim() != format!("layer {k}") {
            return Err(Error::format(n, format!("expected 'layer {k}'")));
        }
        let mut data = Vec::with_capacity(fan_out * fan_in);
        for _ in 0..fan_out {
            let (n, l) = next_line("weight row")?;
            data.extend(parse_floats(l, n, fan_in)?);
        }
        let weight = Matrix::from_vec(fan_out, fan_in, data)?;
        let (n, l) = next_line("bias")?;
        let bias = parse_floats(l, n, fan_out)?;
        let (n, l) = next_line("u vector")?;
        let u = parse_floats(l, n, fan_out)?;
        let (n, l) = next_line("sigma")?;
        let sigma = parse_floats(l, n, 1)?[0];
        layers.push(Layer {
            weight,
            bias,
            u,
            sigma,
        });
    }
    Ok((
        MlpParams {
            layers,
            activation: Activation::Relu,
            spectral_norm,
        },
        role,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn round_trip_is_exact() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut p = MlpParams::new(&[4, 7, 1], Activation::Relu, true, &mut rng).unwrap();
        p.refresh_spectral(3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        save_mlp(&p, "return_head", &path).unwrap();
        let (q, role) = load_mlp(&path).unwrap();
        assert_eq!(role, "return_head");
        assert_eq!(q.spectral_norm, p.spectral_norm);
        for (a, b) in p.layers.iter().zip(&q.layers) {
            assert_eq!(a.weight, b.weight);
            assert_eq!(a.bias, b.bias);
            assert_eq!(a.u, b.u);
            assert_eq!(a.sigma, b.sigma);
        }
    }

    #[test]
    fn truncated_file_reports_line() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let p = MlpParams::new(&[3, 5, 1], Activation::Relu, false, &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        save_mlp(&p, "bc", &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let cut: String = text.lines().take(7).collect::<Vec<_>>().join("\n");
        std::fs::write(&path, cut).unwrap();
        match load_mlp(&path) {
            Err(Error::Format { .. }) => {}
            other => panic!("expected format error, got {other:?}"),
        }
    }
}
