//! Trained classifier: kernel expansion over support vectors plus a bias.

use std::io::{BufRead, Write};

use crate::data::{Dataset, Label};
use crate::error::{Result, UsmoError};
use crate::kernel::KernelSpec;

pub const MODEL_HEADER: &str = "usmo-model v1";

#[derive(Debug, Clone, PartialEq)]
pub struct SupportVector {
    pub alpha: f64,
    pub x: Vec<f64>,
}

/// `f(x) = sum_i alpha_i k(x, x_i) + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub kernel: KernelSpec,
    pub bias: f64,
    pub coefficients: Vec<SupportVector>,
    pub dim: usize,
}

impl Model {
    /// Keeps every training sample whose coefficient is nonzero, in dataset order.
    pub fn from_dual(data: &Dataset, kernel: KernelSpec, alpha: &[f64], bias: f64) -> Result<Self> {
        if alpha.len() != data.len() {
            return Err(UsmoError::input(format!(
                "{} coefficients for {} samples",
                alpha.len(),
                data.len()
            )));
        }
        let coefficients = alpha
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0.0)
            .map(|(k, &a)| SupportVector {
                alpha: a,
                x: data.sample(k).to_vec(),
            })
            .collect();
        Ok(Model {
            kernel,
            bias,
            coefficients,
            dim: data.dim(),
        })
    }

    pub fn predict_score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(UsmoError::input(format!(
                "sample has dimension {}, model expects {}",
                x.len(),
                self.dim
            )));
        }
        let sum: f64 = self
            .coefficients
            .iter()
            .map(|sv| sv.alpha * self.kernel.eval_unchecked(x, &sv.x))
            .sum();
        Ok(sum + self.bias)
    }

    /// Sign of the score; a score of exactly zero counts as positive.
    pub fn predict_label(&self, x: &[f64]) -> Result<Label> {
        Ok(label_of(self.predict_score(x)?))
    }

    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{MODEL_HEADER}")?;
        match self.kernel {
            KernelSpec::Linear => writeln!(out, "kernel linear")?,
            KernelSpec::Gaussian { scale } => writeln!(out, "kernel gaussian {}", fmt_float(scale))?,
        }
        writeln!(out, "bias {}", fmt_float(self.bias))?;
        writeln!(out, "dim {}", self.dim)?;
        writeln!(out, "nsv {}", self.coefficients.len())?;
        for sv in &self.coefficients {
            let mut line = fmt_float(sv.alpha);
            for (k, &v) in sv.x.iter().enumerate() {
                if v != 0.0 || v.is_sign_negative() {
                    line.push_str(&format!(" {}:{}", k + 1, fmt_float(v)));
                }
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate().map(|(k, l)| l.map(|l| (k + 1, l)));
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some(r) => Ok(r?),
                None => Err(UsmoError::parse(0, format!("unexpected end of file, expected {what}"))),
            }
        };

        let (ln, header) = next("header")?;
        if header != MODEL_HEADER {
            let msg = match header.strip_prefix("usmo-model ") {
                Some(v) => format!("unsupported model version '{v}'"),
                None => format!("malformed header '{header}'"),
            };
            return Err(UsmoError::parse(ln, msg));
        }

        let (ln, line) = next("kernel line")?;
        let kernel = match line.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["kernel", "linear"] => KernelSpec::Linear,
            ["kernel", "gaussian", s] => {
                let scale = parse_float(s, ln)?;
                let k = KernelSpec::Gaussian { scale };
                k.validate().map_err(|e| UsmoError::parse(ln, e.to_string()))?;
                k
            }
            _ => return Err(UsmoError::parse(ln, format!("malformed kernel line '{line}'"))),
        };

        let (ln, line) = next("bias line")?;
        let bias = parse_float(keyed(&line, "bias", ln)?, ln)?;
        let (ln, line) = next("dim line")?;
        let dim = parse_count(keyed(&line, "dim", ln)?, ln)?;
        let (ln, line) = next("nsv line")?;
        let nsv = parse_count(keyed(&line, "nsv", ln)?, ln)?;

        let mut coefficients = Vec::with_capacity(nsv.min(1 << 20));
        for _ in 0..nsv {
            let (ln, line) = next("coefficient line")?;
            let mut fields = line.split_whitespace();
            let alpha = parse_float(
                fields
                    .next()
                    .ok_or_else(|| UsmoError::parse(ln, "empty coefficient line"))?,
                ln,
            )?;
            let mut x = vec![0.0; dim];
            let mut last = 0;
            for field in fields {
                let (idx, val) = field
                    .split_once(':')
                    .ok_or_else(|| UsmoError::parse(ln, format!("expected index:value, got '{field}'")))?;
                let idx = parse_count(idx, ln)?;
                if idx == 0 || idx > dim || idx <= last {
                    return Err(UsmoError::parse(
                        ln,
                        format!("feature index {idx} out of order or range"),
                    ));
                }
                last = idx;
                x[idx - 1] = parse_float(val, ln)?;
            }
            coefficients.push(SupportVector { alpha, x });
        }
        if let Some((ln, extra)) = lines.next().transpose()? {
            if !extra.trim().is_empty() {
                return Err(UsmoError::parse(ln, "trailing content after the last coefficient"));
            }
        }
        Ok(Model {
            kernel,
            bias,
            coefficients,
            dim,
        })
    }
}

pub fn label_of(score: f64) -> Label {
    if score >= 0.0 {
        Label::Positive
    } else {
        Label::Negative
    }
}

/// 17 significant digits: enough to round-trip any `f64`.
fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn keyed<'a>(line: &'a str, key: &str, ln: usize) -> Result<&'a str> {
    match line.split_whitespace().collect::<Vec<_>>().as_slice() {
        [k, v] if *k == key => Ok(v),
        _ => Err(UsmoError::parse(ln, format!("expected '{key} <value>', got '{line}'"))),
    }
}

fn parse_float(s: &str, ln: usize) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| UsmoError::parse(ln, format!("invalid number '{s}'")))?;
    if !v.is_finite() {
        return Err(UsmoError::parse(ln, format!("non-finite value '{s}'")));
    }
    Ok(v)
}

fn parse_count(s: &str, ln: usize) -> Result<usize> {
    s.parse()
        .map_err(|_| UsmoError::parse(ln, format!("invalid count '{s}'")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t1_model() -> Model {
        let data = Dataset::new(&[vec![1.0]], &[vec![1.0], vec![-1.0]]).unwrap();
        Model::from_dual(&data, KernelSpec::Linear, &[1.0, -0.5, -0.5], 0.0).unwrap()
    }

    fn roundtrip(m: &Model) -> Model {
        let mut buf = Vec::new();
        m.save(&mut buf).unwrap();
        Model::load(buf.as_slice()).unwrap()
    }

    #[test]
    fn scores_on_tiny_model() {
        let m = t1_model();
        assert_eq!(m.predict_score(&[1.0]).unwrap(), 1.0);
        assert_eq!(m.predict_score(&[-1.0]).unwrap(), -1.0);
        assert_eq!(m.predict_label(&[1.0]).unwrap(), Label::Positive);
        assert_eq!(m.predict_label(&[-1.0]).unwrap(), Label::Negative);
        assert_eq!(m.predict_label(&[0.0]).unwrap(), Label::Positive);
        assert!(matches!(m.predict_score(&[1.0, 2.0]), Err(UsmoError::Input(_))));
    }

    #[test]
    fn empty_expansion_gives_bias() {
        let m = Model {
            kernel: KernelSpec::Linear,
            bias: 0.25,
            coefficients: vec![],
            dim: 3,
        };
        assert_eq!(m.predict_score(&[1.0, 2.0, 3.0]).unwrap(), 0.25);
    }

    #[test]
    fn scaling_is_linear() {
        let mut m = t1_model();
        m.bias = 0.3;
        let s = m.predict_score(&[0.7]).unwrap();
        m.bias *= 2.0;
        m.coefficients.iter_mut().for_each(|sv| sv.alpha *= 2.0);
        assert_eq!(m.predict_score(&[0.7]).unwrap(), 2.0 * s);
    }

    #[test]
    fn save_load_roundtrip() {
        let m = t1_model();
        assert_eq!(roundtrip(&m), m);
        let odd = Model {
            kernel: KernelSpec::Gaussian { scale: 0.1 + 0.2 },
            bias: -1.0 / 3.0,
            coefficients: vec![SupportVector {
                alpha: std::f64::consts::PI * 1e-300,
                x: vec![0.0, -0.0, 1e308, -2.5e-310],
            }],
            dim: 4,
        };
        let back = roundtrip(&odd);
        assert_eq!(back, odd);
        assert!(back.coefficients[0].x[1].is_sign_negative());
        let probe = [0.3, -0.2, 0.0, 1.0];
        assert_eq!(
            back.predict_score(&probe).unwrap().to_bits(),
            odd.predict_score(&probe).unwrap().to_bits()
        );
    }

    #[test]
    fn load_errors_name_lines() {
        let err = Model::load("usmo-model v99\n".as_bytes()).unwrap_err();
        assert!(matches!(err, UsmoError::Parse { line: 1, .. }), "{err}");
        assert!(err.to_string().contains("version"));

        let text = "usmo-model v1\nkernel linear\nbias 0\ndim 2\nnsv 1\n1.0 1:0.5 2\n";
        assert!(matches!(
            Model::load(text.as_bytes()),
            Err(UsmoError::Parse { line: 6, .. })
        ));

        let text = "usmo-model v1\nkernel linear\nbias NaN\ndim 2\nnsv 0\n";
        assert!(matches!(
            Model::load(text.as_bytes()),
            Err(UsmoError::Parse { line: 3, .. })
        ));
    }
}
