//! The structured matrices behind the integer-δ engines.
//!
//! For `δ = n` the vector `q(λ) = (E[e^{ikα_λ(0)}])_{k=1..n}` solves a linear
//! system built from
//!
//! * `A_n`, tridiagonal with `A[k,k] = -k²`, `A[k,k-1] = k(k+n)/2`,
//!   `A[k,k+1] = k(k-n)/2` (indices from 1),
//! * `B_n = diag(1, ..., n)`,
//! * `e = (1, 0, ..., 0)`, `f = (1, ..., 1)`,
//! * `v[k] = (-1)^k C(2n, n+k) / C(2n, n)`.
//!
//! [`identity_report`] re-derives the algebraic facts the engines rely on in
//! exact rational arithmetic.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::mpfloat::Real;

/// Largest `n` accepted by [`build_system`].
pub const MAX_SYSTEM_SIZE: usize = 64;
/// Largest `n` for the exact combinatorial checks.
pub const MAX_EXACT_SIZE: usize = 30;

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Entry at zero-based `(row, col)`.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.n + col] = value;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        self.data
            .chunks(self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// `A_n, B_n, e_n, v_n, f_n` for one `n`. `A` is kept in band form.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SystemMatrices {
    pub n: usize,
    /// `A[k,k-1]` for `k = 2..=n` (length `n-1`).
    pub a_sub: Vec<f64>,
    /// `A[k,k]` for `k = 1..=n`.
    pub a_diag: Vec<f64>,
    /// `A[k,k+1]` for `k = 1..=n-1` (length `n-1`).
    pub a_sup: Vec<f64>,
    /// Diagonal of `B`.
    pub b: Vec<f64>,
    pub e: Vec<f64>,
    pub v: Vec<f64>,
    pub f: Vec<f64>,
}

impl SystemMatrices {
    /// `A` as a dense matrix.
    pub fn a_dense(&self) -> DenseMatrix {
        let n = self.n;
        let mut m = DenseMatrix::zeros(n);
        for i in 0..n {
            m.set(i, i, self.a_diag[i]);
            if i > 0 {
                m.set(i, i - 1, self.a_sub[i - 1]);
            }
            if i + 1 < n {
                m.set(i, i + 1, self.a_sup[i]);
            }
        }
        m
    }

    /// `A x` using the band structure.
    pub fn a_mul(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let mut s = self.a_diag[i] * x[i];
                if i > 0 {
                    s += self.a_sub[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.a_sup[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// `(n+1)/2`, the weight of `e` in the inhomogeneous term.
    pub fn source_weight(&self) -> f64 {
        0.5 * (self.n as f64 + 1.0)
    }
}

fn check_size(n: usize, max: usize) -> Result<()> {
    if n == 0 || n > max {
        return Err(Error::Size { n, max });
    }
    Ok(())
}

/// Builds `A_n, B_n, e_n, v_n, f_n` for `1 <= n <= 64`.
pub fn build_system(n: usize) -> Result<SystemMatrices> {
    check_size(n, MAX_SYSTEM_SIZE)?;
    let nf = n as f64;
    let a_diag = (1..=n).map(|k| -((k * k) as f64)).collect();
    let a_sub = (2..=n).map(|k| 0.5 * k as f64 * (k as f64 + nf)).collect();
    let a_sup = (1..n).map(|k| 0.5 * k as f64 * (k as f64 - nf)).collect();
    let b = (1..=n).map(|k| k as f64).collect();
    let mut e = vec![0.0; n];
    e[0] = 1.0;
    // C(2n, n+k)/C(2n, n) = Π_{j=1}^{k} (n-j+1)/(n+j)
    let mut v = Vec::with_capacity(n);
    let mut ratio = 1.0;
    for k in 1..=n {
        ratio *= (nf - k as f64 + 1.0) / (nf + k as f64);
        v.push(if k % 2 == 1 { -ratio } else { ratio });
    }
    Ok(SystemMatrices {
        n,
        a_sub,
        a_diag,
        a_sup,
        b,
        e,
        v,
        f: vec![1.0; n],
    })
}

/// Eigenvalues `γ_k = k(k-1)/2 - n(n+1)/2` of `A_n`, increasing.
pub fn eigenvalues_a(n: usize) -> Result<Vec<f64>> {
    check_size(n, MAX_SYSTEM_SIZE)?;
    let shift = (n * (n + 1) / 2) as f64;
    Ok((1..=n).map(|k| (k * (k - 1) / 2) as f64 - shift).collect())
}

fn binomial(a: usize, b: usize) -> BigInt {
    if b > a {
        return BigInt::zero();
    }
    let b = b.min(a - b);
    let mut c = BigInt::one();
    for j in 0..b {
        c = c * BigInt::from(a - j) / BigInt::from(j + 1);
    }
    c
}

fn signed_binomial(a: usize, b: usize) -> BigInt {
    let c = binomial(a, b);
    if b % 2 == 1 {
        -c
    } else {
        c
    }
}

/// `T[a,b] = C(a,b)(-1)^b`, lower triangular, `1 <= n <= 30`.
///
/// `T` is its own inverse and `T A T` is upper bidiagonal, which exposes the
/// spectrum of `A`.
pub fn involution_t(n: usize) -> Result<DenseMatrix> {
    check_size(n, MAX_EXACT_SIZE)?;
    let mut t = DenseMatrix::zeros(n);
    for a in 1..=n {
        for b in 1..=a {
            let c = signed_binomial(a, b);
            // |C(30, 15)| < 2^53, so the conversion is exact
            t.set(a - 1, b - 1, c.to_f64().unwrap_or(f64::NAN));
        }
    }
    Ok(t)
}

/// One line of an [`IdentityReport`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IdentityCheck {
    pub name: String,
    /// Index at which the identity was checked (ℓ, j, ...), when relevant.
    pub index: Option<usize>,
    pub passed: bool,
    pub detail: String,
}

/// Outcome of the exact identity suite for one `n`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IdentityReport {
    pub n: usize,
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &IdentityCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

type Rat = BigRational;

fn rat(x: i64) -> Rat {
    Rat::from_integer(BigInt::from(x))
}

fn half(x: i64) -> Rat {
    Rat::new(BigInt::from(x), BigInt::from(2))
}

struct ExactSystem {
    n: usize,
    a: Vec<Vec<Rat>>,
    v: Vec<Rat>,
}

impl ExactSystem {
    fn new(n: usize) -> Self {
        let ni = n as i64;
        let mut a = vec![vec![Rat::zero(); n]; n];
        for k in 1..=n {
            let ki = k as i64;
            a[k - 1][k - 1] = rat(-ki * ki);
            if k > 1 {
                a[k - 1][k - 2] = half(ki * (ki + ni));
            }
            if k < n {
                a[k - 1][k] = half(ki * (ki - ni));
            }
        }
        let c2n = binomial(2 * n, n);
        let v = (1..=n)
            .map(|k| {
                let c = binomial(2 * n, n + k);
                Rat::new(if k % 2 == 1 { -c } else { c }, c2n.clone())
            })
            .collect();
        ExactSystem { n, a, v }
    }

    fn a_mul(&self, x: &[Rat]) -> Vec<Rat> {
        self.a
            .iter()
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `B^ℓ f`, i.e. the vector `(k^ℓ)_k`.
    fn powers(&self, l: u32) -> Vec<Rat> {
        (1..=self.n)
            .map(|k| Rat::from_integer(BigInt::from(k).pow(l)))
            .collect()
    }
}

fn matmul_exact(x: &[Vec<Rat>], y: &[Vec<Rat>]) -> Vec<Vec<Rat>> {
    let n = x.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| &x[i][k] * &y[k][j]).sum())
                .collect()
        })
        .collect()
}

fn dot(x: &[Rat], y: &[Rat]) -> Rat {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn factorial(m: usize) -> BigInt {
    (1..=m).fold(BigInt::one(), |acc, j| acc * BigInt::from(j))
}

fn first_mismatch(lhs: &[Rat], rhs: &[Rat]) -> Option<usize> {
    lhs.iter().zip(rhs).position(|(a, b)| a != b)
}

/// Checks, in exact rational arithmetic for `1 <= n <= 30`:
///
/// * `A f = -(n+1)/2 e` (so the constant term of the series is `f`);
/// * `A B^ℓ f = Σ_j (C(ℓ,2j+2) - n C(ℓ,2j+1)) B^{ℓ-2j} f` for `1 <= ℓ <= 2n`;
/// * `v·f = -1/2`, `v·B^{2j} f = 0` for `1 <= j < n` and
///   `v·B^{2n} f = (-1)^n C(2n,n)^{-1} (2n)!/2`;
/// * the Chu–Vandermonde identity
///   `Σ_k (-1)^k C(a,k) C(k+r,b) = (-1)^a C(r,b-a)` for `a, b, r <= n`;
/// * `T² = I` and `T A T` upper bidiagonal with diagonal `k(k-1)/2 - kn` and
///   superdiagonal `k(n-k)/2`;
/// * the diagonal of `T A T` is the set `{γ_k}` of [`eigenvalues_a`].
pub fn identity_report(n: usize) -> Result<IdentityReport> {
    check_size(n, MAX_EXACT_SIZE)?;
    let sys = ExactSystem::new(n);
    let ni = n as i64;
    let mut checks = Vec::new();
    let mut push = |name: &str, index: Option<usize>, passed: bool, detail: String| {
        checks.push(IdentityCheck {
            name: String::from(name),
            index,
            passed,
            detail,
        });
    };

    // A f = -(n+1)/2 e
    let af = sys.a_mul(&sys.powers(0));
    let mut expected = vec![Rat::zero(); n];
    expected[0] = half(-(ni + 1));
    let bad = first_mismatch(&af, &expected);
    push(
        "A f = -(n+1)/2 e",
        None,
        bad.is_none(),
        match bad {
            None => String::from("exact"),
            Some(k) => format!("component {} is {}", k + 1, af[k]),
        },
    );

    for l in 1..=(2 * n) {
        let lhs = sys.a_mul(&sys.powers(l as u32));
        let mut rhs = vec![Rat::zero(); n];
        for j in 0..=((l - 1) / 2) {
            let coeff = binomial(l, 2 * j + 2) - BigInt::from(n) * binomial(l, 2 * j + 1);
            let coeff = Rat::from_integer(coeff);
            for (r, p) in rhs.iter_mut().zip(sys.powers((l - 2 * j) as u32)) {
                *r += &coeff * p;
            }
        }
        let bad = first_mismatch(&lhs, &rhs);
        push(
            "A B^l f expansion",
            Some(l),
            bad.is_none(),
            match bad {
                None => String::from("exact"),
                Some(k) => format!("component {}: {} vs {}", k + 1, lhs[k], rhs[k]),
            },
        );
    }

    let vf = dot(&sys.v, &sys.powers(0));
    push("v f = -1/2", None, vf == half(-1), format!("v f = {vf}"));
    for j in 1..n {
        let value = dot(&sys.v, &sys.powers(2 * j as u32));
        push(
            "v B^2j f = 0",
            Some(j),
            value.is_zero(),
            format!("v B^{} f = {value}", 2 * j),
        );
    }
    let top = dot(&sys.v, &sys.powers(2 * n as u32));
    let sign = if n % 2 == 0 { 1 } else { -1 };
    let expected_top = Rat::new(
        factorial(2 * n) * sign,
        binomial(2 * n, n) * BigInt::from(2),
    );
    push(
        "v B^2n f = (-1)^n (2n)!/(2 C(2n,n))",
        Some(n),
        top == expected_top,
        format!("{top} vs {expected_top}"),
    );

    let mut chu_ok = true;
    let mut chu_detail = String::from("exact for a, b, r <= n");
    'outer: for a in 0..=n {
        for b in 0..=n {
            for r in 0..=n {
                let lhs: BigInt = (0..=a)
                    .map(|k| {
                        let term = binomial(a, k) * binomial(k + r, b);
                        if k % 2 == 1 {
                            -term
                        } else {
                            term
                        }
                    })
                    .sum();
                let rhs_mag = if b >= a {
                    binomial(r, b - a)
                } else {
                    BigInt::zero()
                };
                let rhs = if a % 2 == 1 { -rhs_mag } else { rhs_mag };
                if lhs != rhs {
                    chu_ok = false;
                    chu_detail = format!("fails at a={a}, b={b}, r={r}: {lhs} vs {rhs}");
                    break 'outer;
                }
            }
        }
    }
    push("Chu-Vandermonde", None, chu_ok, chu_detail);

    let t: Vec<Vec<Rat>> = (1..=n)
        .map(|a| {
            (1..=n)
                .map(|b| Rat::from_integer(signed_binomial(a, b)))
                .collect()
        })
        .collect();
    let tt = matmul_exact(&t, &t);
    let identity_ok =
        (0..n).all(|i| (0..n).all(|j| tt[i][j] == if i == j { Rat::one() } else { Rat::zero() }));
    push(
        "T T = I",
        None,
        identity_ok,
        String::from(if identity_ok {
            "exact"
        } else {
            "T is not an involution"
        }),
    );

    let tat = matmul_exact(&matmul_exact(&t, &sys.a), &t);
    let mut bidiag_detail = String::from("exact");
    let mut bidiag_ok = true;
    'rows: for k in 1..=n {
        for m in 1..=n {
            let ki = k as i64;
            let expected = if m == k {
                half(ki * (ki - 1) - 2 * ki * ni)
            } else if m == k + 1 {
                half(ki * (ni - ki))
            } else {
                Rat::zero()
            };
            if tat[k - 1][m - 1] != expected {
                bidiag_ok = false;
                bidiag_detail = format!(
                    "entry ({k},{m}) is {} expected {expected}",
                    tat[k - 1][m - 1]
                );
                break 'rows;
            }
        }
    }
    push("T A T upper bidiagonal", None, bidiag_ok, bidiag_detail);

    let mut diag: Vec<Rat> = (0..n).map(|k| tat[k][k].clone()).collect();
    diag.sort();
    let gammas: Vec<Rat> = (1..=n as i64)
        .map(|k| half(k * (k - 1) - ni * (ni + 1)))
        .collect();
    let spectrum_ok = diag == gammas;
    push(
        "spectrum of A is {k(k-1)/2 - n(n+1)/2}",
        None,
        spectrum_ok,
        String::from(if spectrum_ok {
            "exact"
        } else {
            "diagonal of T A T differs"
        }),
    );
    let negative = gammas.iter().all(Signed::is_negative) && gammas.last() == Some(&rat(-ni));
    push(
        "eigenvalues negative, largest -n",
        None,
        negative,
        String::from(if negative {
            "exact"
        } else {
            "sign or abscissa mismatch"
        }),
    );

    Ok(IdentityReport { n, checks })
}

/// Solves a tridiagonal system in place of `rhs`, with row interchanges
/// (partial pivoting) as in LAPACK `gtsv`.
///
/// `sub[i]` multiplies `x[i]` in row `i+1`, `sup[i]` multiplies `x[i+1]` in
/// row `i`. Returns `None` when a pivot vanishes.
pub fn solve_tridiagonal_pivoting<T: Real>(
    sub: &[T],
    diag: &[T],
    sup: &[T],
    rhs: &[T],
) -> Option<Vec<T>> {
    let n = diag.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let zero = diag[0].cast(0.0);
    let mut d: Vec<T> = diag.to_vec();
    let mut du: Vec<T> = sup.to_vec();
    let mut dl: Vec<T> = sub.to_vec();
    let mut du2: Vec<T> = vec![zero.clone(); n.saturating_sub(2)];
    let mut b: Vec<T> = rhs.to_vec();
    for i in 0..n.saturating_sub(1) {
        if d[i].log2_abs() >= dl[i].log2_abs() {
            if d[i].is_zero() {
                return None;
            }
            let fact = dl[i].clone() / d[i].clone();
            d[i + 1] = d[i + 1].clone() - fact.clone() * du[i].clone();
            b[i + 1] = b[i + 1].clone() - fact * b[i].clone();
            dl[i] = zero.clone();
        } else {
            // interchange rows i and i+1
            let fact = d[i].clone() / dl[i].clone();
            d[i] = dl[i].clone();
            let temp = d[i + 1].clone();
            d[i + 1] = du[i].clone() - fact.clone() * temp.clone();
            if i + 2 < n {
                dl[i] = du[i + 1].clone();
                du[i + 1] = -(fact.clone() * dl[i].clone());
            }
            du[i] = temp;
            let tb = b[i].clone();
            b[i] = b[i + 1].clone();
            b[i + 1] = tb - fact * b[i + 1].clone();
        }
        if i + 2 < n {
            du2[i] = dl[i].clone();
        }
    }
    if d[n - 1].is_zero() {
        return None;
    }
    // back substitution with the second superdiagonal
    let mut x = b;
    x[n - 1] = x[n - 1].clone() / d[n - 1].clone();
    if n > 1 {
        x[n - 2] = (x[n - 2].clone() - du[n - 2].clone() * x[n - 1].clone()) / d[n - 2].clone();
    }
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] =
            (x[i].clone() - du[i].clone() * x[i + 1].clone() - du2[i].clone() * x[i + 2].clone())
                / d[i].clone();
    }
    Some(x)
}

/// Thomas elimination without pivoting; only stable for diagonally dominant
/// matrices. Returns `None` on a zero pivot.
pub fn solve_tridiagonal_thomas<T: Real>(
    sub: &[T],
    diag: &[T],
    sup: &[T],
    rhs: &[T],
) -> Option<Vec<T>> {
    let n = diag.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let mut c: Vec<T> = Vec::with_capacity(n);
    let mut d: Vec<T> = Vec::with_capacity(n);
    if diag[0].is_zero() {
        return None;
    }
    let zero = diag[0].cast(0.0);
    c.push(if n > 1 {
        sup[0].clone() / diag[0].clone()
    } else {
        zero.clone()
    });
    d.push(rhs[0].clone() / diag[0].clone());
    for i in 1..n {
        let denom = diag[i].clone() - sub[i - 1].clone() * c[i - 1].clone();
        if denom.is_zero() {
            return None;
        }
        c.push(if i + 1 < n {
            sup[i].clone() / denom.clone()
        } else {
            zero.clone()
        });
        d.push((rhs[i].clone() - sub[i - 1].clone() * d[i - 1].clone()) / denom);
    }
    for i in (0..n - 1).rev() {
        d[i] = d[i].clone() - c[i].clone() * d[i + 1].clone();
    }
    Some(d)
}

/// Strict row diagonal dominance of a tridiagonal matrix given in `f64`.
pub fn is_diagonally_dominant(sub: &[f64], diag: &[f64], sup: &[f64]) -> bool {
    let n = diag.len();
    (0..n).all(|i| {
        let mut off = 0.0;
        if i > 0 {
            off += libm::fabs(sub[i - 1]);
        }
        if i + 1 < n {
            off += libm::fabs(sup[i]);
        }
        libm::fabs(diag[i]) > off
    })
}

/// Solves `(k I - c A) x = rhs` for the band matrix `A` of `sys`, with
/// `c = 4/β` already converted to `T`. Uses Thomas elimination when the
/// matrix is diagonally dominant and pivoting otherwise.
pub fn solve_shifted<T: Real>(sys: &SystemMatrices, k: usize, c: &T, rhs: &[T]) -> Result<Vec<T>> {
    let kf = rhs[0].cast(k as f64);
    let sub: Vec<T> = sys
        .a_sub
        .iter()
        .map(|&a| -(c.clone() * rhs[0].cast(a)))
        .collect();
    let sup: Vec<T> = sys
        .a_sup
        .iter()
        .map(|&a| -(c.clone() * rhs[0].cast(a)))
        .collect();
    let diag: Vec<T> = sys
        .a_diag
        .iter()
        .map(|&a| kf.clone() - c.clone() * rhs[0].cast(a))
        .collect();
    let dominant = is_diagonally_dominant(
        &sub.iter().map(Real::to_f64).collect::<Vec<_>>(),
        &diag.iter().map(Real::to_f64).collect::<Vec<_>>(),
        &sup.iter().map(Real::to_f64).collect::<Vec<_>>(),
    );
    let solution = if dominant {
        solve_tridiagonal_thomas(&sub, &diag, &sup, rhs)
    } else {
        solve_tridiagonal_pivoting(&sub, &diag, &sup, rhs)
    };
    solution.ok_or(Error::Singular { k })
}
