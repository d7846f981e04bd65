//! The `n + 1` qubit circuit `H^n -> U_f -> H^n` post-selected on a zero
//! first register, which leaves the last qubit in
//! `((2^n - s)|0> + s|1>) / 2^n` with `s = #{x : f(x) = 1}`.

use std::fmt::Write as _;

use rand::Rng;
use serde::Serialize;
use subquantum_core::rng;
use subquantum_core::{Error, Result};

/// Largest first register simulated.
pub const MAX_QUBITS: usize = 12;

/// A tabulated `f: {0, 1}^n -> {0, 1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Oracle {
    pub n: usize,
    pub table: Vec<bool>,
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_QUBITS {
        return Err(Error::RegisterTooLarge { qubits: n + 1, limit: MAX_QUBITS + 1 });
    }
    if n == 0 {
        return Err(Error::param("n", "need at least one input qubit"));
    }
    Ok(())
}

impl Oracle {
    pub fn from_table(n: usize, table: Vec<bool>) -> Result<Self> {
        check_size(n)?;
        if table.len() != 1 << n {
            return Err(Error::param("oracle", format!("table needs {} entries, got {}", 1usize << n, table.len())));
        }
        Ok(Oracle { n, table })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize) -> bool) -> Result<Self> {
        check_size(n)?;
        Self::from_table(n, (0..1usize << n).map(f).collect())
    }

    /// Hex truth table, least significant bit first: bit `x` of the number
    /// is `f(x)`. A `0x` prefix is allowed.
    pub fn from_hex(n: usize, hex: &str) -> Result<Self> {
        check_size(n)?;
        let digits = hex.trim().trim_start_matches("0x").trim_start_matches("0X");
        if digits.is_empty() {
            return Err(Error::Parse("empty truth table".into()));
        }
        let size = 1usize << n;
        let mut table = vec![false; size];
        for (k, c) in digits.chars().rev().enumerate() {
            let d = c.to_digit(16).ok_or_else(|| Error::Parse(format!("`{c}` is not a hex digit")))?;
            for b in 0..4 {
                if d >> b & 1 == 1 {
                    let x = 4 * k + b;
                    if x >= size {
                        return Err(Error::Parse(format!("truth table `{hex}` sets f({x}) beyond 2^{n} inputs")));
                    }
                    table[x] = true;
                }
            }
        }
        Ok(Oracle { n, table })
    }

    /// `zero`, `all`, `single:x`, `count:s` (the first `s` inputs), or
    /// `random` (each entry a fair coin from `seed`); anything else is read
    /// as a hex truth table.
    pub fn parse(n: usize, spec: &str, seed: u64) -> Result<Self> {
        check_size(n)?;
        let size = 1usize << n;
        let number = |s: &str, what: &str| s.parse::<usize>().map_err(|_| Error::Parse(format!("bad {what} `{s}`")));
        match spec.split_once(':') {
            _ if spec == "zero" => Self::from_fn(n, |_| false),
            _ if spec == "all" => Self::from_fn(n, |_| true),
            _ if spec == "random" => {
                let mut r = rng::stream(seed, 0);
                Self::from_table(n, (0..size).map(|_| r.random::<bool>()).collect())
            }
            Some(("single", x)) => {
                let x = number(x, "input")?;
                if x >= size {
                    return Err(Error::param("oracle", format!("input {x} outside 0..{size}")));
                }
                Self::from_fn(n, |y| y == x)
            }
            Some(("count", s)) => {
                let s = number(s, "count")?;
                if s > size {
                    return Err(Error::param("oracle", format!("count {s} exceeds 2^{n}")));
                }
                Self::from_fn(n, |y| y < s)
            }
            _ => Self::from_hex(n, spec),
        }
    }

    /// `#{x : f(x) = 1}` by enumeration.
    pub fn count(&self) -> u64 {
        self.table.iter().filter(|&&b| b).count() as u64
    }
}

/// Dense real amplitudes of `n + 1` qubits; index `x + 2^n b` holds
/// `|x>|b>`.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitRegister {
    pub n: usize,
    pub amplitudes: Vec<f64>,
}

impl QubitRegister {
    /// `|0...0>|0>`.
    pub fn zero(n: usize) -> Result<Self> {
        check_size(n)?;
        let mut amplitudes = vec![0.0; 2 << n];
        amplitudes[0] = 1.0;
        Ok(QubitRegister { n, amplitudes })
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// `H` on each of the first `n` qubits: a Walsh-Hadamard transform of
    /// each half.
    pub fn hadamard_first(&mut self) {
        let size = 1usize << self.n;
        let scale = (size as f64).sqrt().recip();
        for half in self.amplitudes.chunks_exact_mut(size) {
            let mut h = 1;
            while h < size {
                for block in half.chunks_exact_mut(2 * h) {
                    let (lo, hi) = block.split_at_mut(h);
                    for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                        (*a, *b) = (*a + *b, *a - *b);
                    }
                }
                h *= 2;
            }
            half.iter_mut().for_each(|a| *a *= scale);
        }
    }

    /// `|x>|b> -> |x>|b xor f(x)>`.
    pub fn apply_oracle(&mut self, f: &Oracle) -> Result<()> {
        if f.n != self.n {
            return Err(Error::param("oracle", format!("oracle on {} qubits, register has {}", f.n, self.n)));
        }
        let size = 1usize << self.n;
        let (zero, one) = self.amplitudes.split_at_mut(size);
        for (x, &fx) in f.table.iter().enumerate() {
            if fx {
                std::mem::swap(&mut zero[x], &mut one[x]);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GadgetOutcome {
    pub n: usize,
    /// Amplitudes of `|0...0>|0>` and `|0...0>|1>` before normalising.
    pub weights: [f64; 2],
    /// Normalised `(alpha0, alpha1)`.
    pub alpha: [f64; 2],
    /// Probability that the first register reads all zeros.
    pub probability: f64,
    /// `2^n weights[1]`, rounded.
    pub implied_s: u64,
    /// `| |register| - 1 |` after the circuit.
    pub norm_error: f64,
}

impl GadgetOutcome {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# gadget n={} implied_s={} probability={}", self.n, self.implied_s, self.probability);
        s.push_str("# branch weight alpha\n");
        for b in 0..2 {
            let _ = writeln!(s, "{b} {:e} {:e}", self.weights[b], self.alpha[b]);
        }
        s
    }
}

/// Runs the circuit on the dense register. `s` is read off the amplitudes,
/// never from the table.
pub fn run_gadget(f: &Oracle) -> Result<GadgetOutcome> {
    let mut reg = QubitRegister::zero(f.n)?;
    reg.hadamard_first();
    reg.apply_oracle(f)?;
    reg.hadamard_first();
    let size = 1usize << f.n;
    let weights = [reg.amplitudes[0], reg.amplitudes[size]];
    let probability = weights[0] * weights[0] + weights[1] * weights[1];
    let norm = probability.sqrt();
    Ok(GadgetOutcome {
        n: f.n,
        weights,
        alpha: [weights[0] / norm, weights[1] / norm],
        probability,
        implied_s: (weights[1] * size as f64).round() as u64,
        norm_error: (reg.norm() - 1.0).abs(),
    })
}
