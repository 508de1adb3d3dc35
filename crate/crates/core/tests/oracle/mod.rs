//! Brute-force reference computations, written without the library's
//! enumeration code: plain formulas and an odometer over mask tuples.

#![allow(dead_code, clippy::needless_range_loop)]

pub fn sub(a: u64, b: u64, q: u64) -> u64 {
    (a + q - b) % q
}

pub fn barrett_alg(q: u64, s: u32) -> impl Fn(u64, u64) -> u64 {
    let c = (1u64 << s) % q;
    move |x, m| {
        if m <= x {
            (x - m) % q
        } else {
            (x + q - m + c) % q
        }
    }
}

pub fn barrett_nat(q: u64, s: u32) -> impl Fn(u64, u64) -> u64 {
    let r = 1u64 << s;
    move |x, m| ((x + r - m) % r) % q
}

pub fn histogram(q: u64, g: impl Fn(u64, u64) -> u64, x: u64) -> Vec<u64> {
    let mut h = vec![0; q as usize];
    for m in 0..q {
        h[g(x, m) as usize] += 1;
    }
    h
}

/// Output histogram of a pipeline given as per-stage lookup tables, over
/// every mask tuple, by counting through an odometer of `d` digits.
///
/// Digit layout: stage masks and fresh masks interleaved in pipeline order.
pub fn pipeline_histogram(
    q: u64,
    tables: &[Vec<u64>],
    fresh: &[bool],
    x: u64,
    stop_after: usize,
    fresh_at_stop: bool,
) -> Vec<u64> {
    let mut dims = 0;
    for i in 0..=stop_after {
        dims += 1;
        let f = if i < stop_after { fresh[i] } else { fresh_at_stop };
        if f {
            dims += 1;
        }
    }
    let mut digits = vec![0u64; dims];
    let mut counts = vec![0u64; q as usize];
    loop {
        let mut w = x;
        let mut d = 0;
        for i in 0..=stop_after {
            w = tables[i][(w * q + digits[d]) as usize];
            d += 1;
            let f = if i < stop_after { fresh[i] } else { fresh_at_stop };
            if f {
                w = sub(w, digits[d], q);
                d += 1;
            }
        }
        counts[w as usize] += 1;
        // advance odometer
        let mut k = 0;
        loop {
            if k == dims {
                return counts;
            }
            digits[k] += 1;
            if digits[k] < q {
                break;
            }
            digits[k] = 0;
            k += 1;
        }
    }
}

pub fn table_of(q: u64, g: impl Fn(u64, u64) -> u64) -> Vec<u64> {
    let mut t = Vec::with_capacity((q * q) as usize);
    for x in 0..q {
        for m in 0..q {
            t.push(g(x, m));
        }
    }
    t
}
