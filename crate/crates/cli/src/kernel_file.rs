//! Kernel specs and the plain-text matrix file format.
//!
//! ```text
//! 2
//! 0.7071067811865476+0i 0.7071067811865476+0i
//! 0.7071067811865476+0i -0.7071067811865476+0i
//! ```
//!
//! The first line is the number of sites `S`, followed by `S` rows of `S`
//! whitespace-separated complex entries `re+imi`. A time-dependent kernel
//! is a sequence of blocks, each headed by `t=<int>`, separated by blank
//! lines. Lines starting with `#` are ignored. Row `r`, column `c` is the
//! amplitude to go from site `c` to site `r` in one step.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ampcalc_core::linalg::CMatrix;
use ampcalc_core::{Complex64, KernelError, StepKernel};
use ndarray::Array2;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KernelFileError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("unknown kernel spec '{0}' (expected identity | hadamard | dft | random:<seed> | file:<path>)")]
    UnknownSpec(String),
    #[error("kernel '{spec}' needs a site count")]
    MissingSites { spec: String },
    #[error("kernel '{spec}' has {found} sites but {expected} were requested")]
    SiteMismatch {
        spec: String,
        expected: usize,
        found: usize,
    },
}

/// Parses `re+imi`, `re-imi`, `re`, `imi`, `+i`, `-i`.
pub fn parse_complex(text: &str) -> Option<Complex64> {
    let Some(body) = text.strip_suffix('i') else {
        return text.parse::<f64>().ok().map(|re| Complex64::new(re, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (body[..k].parse::<f64>().ok()?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        s => s.parse::<f64>().ok()?,
    };
    Some(Complex64::new(re, im))
}

/// `re+imi` with 17 significant digits in each part.
pub fn format_complex(z: Complex64) -> String {
    format!("{:.16e}{:+.16e}i", z.re, z.im)
}

fn syntax(line: usize, message: impl Into<String>) -> KernelFileError {
    KernelFileError::Syntax {
        line,
        message: message.into(),
    }
}

pub fn parse_kernel(text: &str) -> Result<StepKernel, KernelFileError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.starts_with('#'))
        .peekable();

    let n = loop {
        match lines.next() {
            Some((_, "")) => continue,
            Some((no, l)) => {
                break l
                    .parse::<usize>()
                    .ok()
                    .filter(|&n| n > 0)
                    .ok_or_else(|| syntax(no, format!("expected a positive site count, found '{l}'")))?
            }
            None => return Err(syntax(1, "empty kernel file")),
        }
    };

    let read_block = |lines: &mut dyn Iterator<Item = (usize, &str)>| -> Result<CMatrix, KernelFileError> {
        let mut m = Array2::zeros((n, n));
        for r in 0..n {
            let (no, l) = lines
                .next()
                .ok_or_else(|| syntax(0, format!("expected {n} rows, file ended after {r}")))?;
            let entries: Vec<&str> = l.split_whitespace().collect();
            if entries.len() != n {
                return Err(syntax(no, format!("expected {n} entries, found {}", entries.len())));
            }
            for (c, e) in entries.into_iter().enumerate() {
                m[[r, c]] = parse_complex(e)
                    .ok_or_else(|| syntax(no, format!("invalid complex entry '{e}'")))?;
            }
        }
        Ok(m)
    };

    while lines.peek().is_some_and(|(_, l)| l.is_empty()) {
        lines.next();
    }
    match lines.peek() {
        Some((_, l)) if l.starts_with("t=") => {
            let mut blocks = BTreeMap::new();
            while let Some((no, header)) = lines.next() {
                if header.is_empty() {
                    continue;
                }
                let t = header
                    .strip_prefix("t=")
                    .and_then(|t| t.trim().parse::<i64>().ok())
                    .ok_or_else(|| syntax(no, format!("expected 't=<int>', found '{header}'")))?;
                let m = read_block(&mut lines)?;
                if blocks.insert(t, m).is_some() {
                    return Err(syntax(no, format!("duplicate block for t={t}")));
                }
                if let Some((no, l)) = lines.next() {
                    if !l.is_empty() {
                        return Err(syntax(no, "expected a blank line after the block"));
                    }
                }
            }
            Ok(StepKernel::time_dependent(blocks)?)
        }
        Some(_) => {
            let m = read_block(&mut lines)?;
            if let Some((no, l)) = lines.find(|(_, l)| !l.is_empty()) {
                return Err(syntax(no, format!("unexpected trailing content '{l}'")));
            }
            Ok(StepKernel::constant(m)?)
        }
        None => Err(syntax(0, "missing kernel rows")),
    }
}

fn write_rows(out: &mut String, m: &CMatrix) {
    for row in m.rows() {
        let entries: Vec<String> = row.iter().map(|z| format_complex(*z)).collect();
        out.push_str(&entries.join(" "));
        out.push('\n');
    }
}

/// Serializes a kernel. Time-invariant kernels with overrides are written as
/// their listed blocks only.
pub fn write_kernel(kernel: &StepKernel) -> String {
    let mut out = format!("{}\n", kernel.num_sites());
    if kernel.is_time_invariant() {
        write_rows(&mut out, kernel.default_matrix().expect("time-invariant kernel"));
    } else {
        for (k, (t, m)) in kernel.listed_times().enumerate() {
            if k > 0 {
                out.push('\n');
            }
            out.push_str(&format!("t={t}\n"));
            write_rows(&mut out, m);
        }
    }
    out
}

pub fn read_kernel_file(path: &Path) -> Result<StepKernel, KernelFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| KernelFileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_kernel(&text)
}

/// `identity | hadamard | dft | random:<seed> | file:<path>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KernelSpec {
    Identity,
    Hadamard,
    Dft,
    Random(u64),
    File(PathBuf),
}

impl FromStr for KernelSpec {
    type Err = KernelFileError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "identity" => Ok(KernelSpec::Identity),
            "hadamard" => Ok(KernelSpec::Hadamard),
            "dft" => Ok(KernelSpec::Dft),
            _ => {
                if let Some(seed) = s.strip_prefix("random:") {
                    seed.parse()
                        .map(KernelSpec::Random)
                        .map_err(|_| KernelFileError::UnknownSpec(s.to_string()))
                } else if let Some(path) = s.strip_prefix("file:").filter(|p| !p.is_empty()) {
                    Ok(KernelSpec::File(PathBuf::from(path)))
                } else {
                    Err(KernelFileError::UnknownSpec(s.to_string()))
                }
            }
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Identity => write!(f, "identity"),
            KernelSpec::Hadamard => write!(f, "hadamard"),
            KernelSpec::Dft => write!(f, "dft"),
            KernelSpec::Random(seed) => write!(f, "random:{seed}"),
            KernelSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl KernelSpec {
    /// Site count fixed by the spec itself, if any.
    pub fn intrinsic_sites(&self) -> Result<Option<usize>, KernelFileError> {
        Ok(match self {
            KernelSpec::Hadamard => Some(2),
            KernelSpec::File(p) => Some(read_kernel_file(p)?.num_sites()),
            _ => None,
        })
    }

    pub fn build(&self, sites: Option<usize>) -> Result<StepKernel, KernelFileError> {
        let sized = |make: &dyn Fn(usize) -> StepKernel| match sites {
            Some(n) if n > 0 => Ok(make(n)),
            _ => Err(KernelFileError::MissingSites {
                spec: self.to_string(),
            }),
        };
        let kernel = match self {
            KernelSpec::Identity => sized(&StepKernel::identity)?,
            KernelSpec::Dft => sized(&StepKernel::dft)?,
            KernelSpec::Random(seed) => sized(&|n| StepKernel::random(n, *seed))?,
            KernelSpec::Hadamard => StepKernel::hadamard(),
            KernelSpec::File(p) => read_kernel_file(p)?,
        };
        match sites {
            Some(n) if n != kernel.num_sites() => Err(KernelFileError::SiteMismatch {
                spec: self.to_string(),
                expected: n,
                found: kernel.num_sites(),
            }),
            _ => Ok(kernel),
        }
    }
}
