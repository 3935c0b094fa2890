#![allow(dead_code)]

use std::path::PathBuf;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

pub fn read(rel: &str) -> String {
    std::fs::read_to_string(fixture(rel)).unwrap()
}

fn exact(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite")
}

/// Least squares with intercept in exact rational arithmetic: normal
/// equations on the raw design `[1, x]`, solved by Gauss-Jordan elimination.
/// Returns `(intercept, weights)`.
pub fn ols_oracle(x: &[Vec<f64>], y: &[f64]) -> (f64, Vec<f64>) {
    let k = x[0].len() + 1;
    let rows: Vec<Vec<BigRational>> = x
        .iter()
        .map(|r| std::iter::once(BigRational::one()).chain(r.iter().map(|&v| exact(v))).collect())
        .collect();
    let ys: Vec<BigRational> = y.iter().map(|&v| exact(v)).collect();
    let mut a: Vec<Vec<BigRational>> = (0..k)
        .map(|i| {
            let mut row: Vec<BigRational> = (0..k)
                .map(|j| rows.iter().fold(BigRational::zero(), |s, r| s + &r[i] * &r[j]))
                .collect();
            row.push(rows.iter().zip(&ys).fold(BigRational::zero(), |s, (r, t)| s + &r[i] * t));
            row
        })
        .collect();
    for col in 0..k {
        let piv = (col..k).find(|&r| !a[r][col].is_zero()).expect("full rank design");
        a.swap(col, piv);
        let p = a[col][col].clone();
        for v in a[col].iter_mut() {
            *v = &*v / &p;
        }
        for r in 0..k {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let pivot_row = a[col].clone();
                for (v, q) in a[r].iter_mut().zip(&pivot_row).skip(col) {
                    *v = &*v - &f * q;
                }
            }
        }
    }
    let sol: Vec<f64> = a.iter().map(|r| to_f64(&r[k])).collect();
    (sol[0], sol[1..].to_vec())
}

fn to_f64(r: &BigRational) -> f64 {
    // scale so the integer quotient carries 64 significant bits
    if r.is_zero() {
        return 0.0;
    }
    let (n, d) = (r.numer().abs(), r.denom().clone());
    let shift = 64i64 - (n.bits() as i64 - d.bits() as i64);
    let q: BigInt = if shift >= 0 { (n << shift as usize) / d } else { n / (d << (-shift) as usize) };
    let v = q.to_f64().unwrap() * 2f64.powi(-shift as i32);
    if r.is_negative() {
        -v
    } else {
        v
    }
}
