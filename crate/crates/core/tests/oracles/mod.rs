//! Reference computations written from the model definitions, sharing no code
//! with the library beyond plain data.

#![allow(dead_code)]

/// Fig. 2 block masses: `(is_signal, k, mass)`, vacuum blocks first.
pub fn block_masses(p: f64, m_min: usize, m_max: usize, q: f64) -> Vec<(bool, usize, f64)> {
    let mut out = Vec::new();
    for k in 0..=m_min {
        let w = if k < m_min {
            p.powi(k as i32) * (1.0 - p)
        } else {
            (1.0 - q) * p.powi(m_min as i32) * (1.0 - p)
        };
        out.push((false, k, w));
    }
    for k in m_min..=m_max {
        let w = if k == m_max {
            p.powi(m_max as i32)
        } else if k == m_min {
            q * p.powi(m_min as i32) * (1.0 - p)
        } else {
            p.powi(k as i32) * (1.0 - p)
        };
        out.push((true, k, w));
    }
    out
}

/// Clicks and pulses per emission cycle by summing over blocks.
pub fn cycle_sums(p: f64, m_min: usize, m_max: usize, q: f64, pad: usize) -> (f64, f64) {
    let mut clicks = 0.0;
    let mut pulses = 0.0;
    for (signal, k, w) in block_masses(p, m_min, m_max, q) {
        if signal {
            clicks += w;
            pulses += w * (k + 1 + pad) as f64;
        } else {
            pulses += w * (k + 1) as f64;
        }
    }
    (clicks, pulses)
}

pub fn flat(k: usize) -> Vec<f64> {
    vec![1.0 / (k as f64).sqrt(); k]
}

/// Detection weights `|E_n|², |F_n|²` for slots `0..=k` with all phases equal.
pub fn mode_weights(a: &[f64], eta_det: f64) -> (Vec<f64>, Vec<f64>) {
    let k = a.len();
    let amp = |n: usize| if n >= 1 && n <= k { a[n - 1] } else { 0.0 };
    let mut e = Vec::with_capacity(k + 1);
    let mut f = Vec::with_capacity(k + 1);
    for n in 0..=k {
        let (hi, lo) = (amp(n + 1), amp(n));
        e.push(eta_det * (hi - lo).powi(2) / 4.0);
        f.push(eta_det * (hi + lo).powi(2) / 4.0);
    }
    (e, f)
}

/// Signal-only outcome of slot `n` of a remnant: `[d0, d1, dc, vac]`.
///
/// Every assignment of `m` photons to the list of modes
/// `(e_0..e_k, f_0..f_k, loss)` is enumerated; a placement counts for slot `n`
/// when no photon sits in an e- or f-mode of a slot in `(n, k_bar]`.
pub fn enumerate_slot(e: &[f64], f: &[f64], loss: &[f64], k_bar: usize, m: usize, n: usize) -> [f64; 4] {
    let mut modes: Vec<(f64, i32, usize)> = Vec::new();
    modes.extend(e.iter().enumerate().map(|(l, &w)| (w, 1, l)));
    modes.extend(f.iter().enumerate().map(|(l, &w)| (w, 0, l)));
    for &g in loss {
        modes.push((g, -1, usize::MAX));
    }
    let mut out = [0.0; 4];
    let total = modes.len().pow(m as u32);
    for code in 0..total {
        let mut c = code;
        let mut prob = 1.0;
        let mut blocked = false;
        let (mut in_e, mut in_f) = (false, false);
        for _ in 0..m {
            let (w, det, l) = modes[c % modes.len()];
            c /= modes.len();
            prob *= w;
            if det >= 0 && l > n && l <= k_bar {
                blocked = true;
            }
            if l == n {
                if det == 1 {
                    in_e = true;
                } else if det == 0 {
                    in_f = true;
                }
            }
        }
        if blocked {
            continue;
        }
        let idx = match (in_f, in_e) {
            (true, false) => 0,
            (false, true) => 1,
            (true, true) => 2,
            (false, false) => 3,
        };
        out[idx] += prob;
    }
    out
}

/// Click, error and double-click probabilities of slot `n` once dark counts
/// are added, by enumerating the dark state of both detectors. Errors are at
/// D1 and a double click is an error half of the time. `live_before` slots
/// arrive first and must stay dark.
pub fn with_darks(sig: [f64; 4], p_dark: f64, live_before: usize) -> (f64, f64, f64) {
    let quiet = ((1.0 - p_dark) * (1.0 - p_dark)).powi(live_before as i32);
    let (mut click, mut error, mut double) = (0.0, 0.0, 0.0);
    let signal_states = [(true, false), (false, true), (true, true), (false, false)];
    for (idx, &(d0s, d1s)) in signal_states.iter().enumerate() {
        for dark0 in [false, true] {
            for dark1 in [false, true] {
                let pr =
                    sig[idx] * if dark0 { p_dark } else { 1.0 - p_dark } * if dark1 { p_dark } else { 1.0 - p_dark };
                let d0 = d0s || dark0;
                let d1 = d1s || dark1;
                if d0 || d1 {
                    click += pr;
                }
                if d0 && d1 {
                    double += pr;
                    error += pr / 2.0;
                } else if d1 {
                    error += pr;
                }
            }
        }
    }
    (quiet * click, quiet * error, quiet * double)
}

/// Expected `(clicks, errors, doubles, pulses)` of one block entered `offset`
/// pulses late. A click at slot `n` ends the trial after `k̄ − n + 1` live
/// pulses plus `dead` blind ones.
#[allow(clippy::too_many_arguments)]
pub fn trial(
    signal: bool,
    k: usize,
    offset: usize,
    coeffs: &dyn Fn(usize) -> Vec<f64>,
    eta_det: f64,
    p_dark: f64,
    m: usize,
    dead: usize,
) -> (f64, f64, f64, f64) {
    let (e, f, loss) = if signal {
        let a = coeffs(k);
        let (e, f) = mode_weights(&a, eta_det);
        let loss = a.iter().map(|x| (1.0 - eta_det) * x * x).collect();
        (e, f, loss)
    } else {
        (vec![0.0; k + 1], vec![0.0; k + 1], vec![1.0])
    };
    let k_bar = k - offset;
    let (mut c, mut er, mut dc, mut pulses) = (0.0, 0.0, 0.0, 0.0);
    for n in (0..=k_bar).rev() {
        let sig = if signal {
            enumerate_slot(&e, &f, &loss, k_bar, m, n)
        } else {
            [0.0, 0.0, 0.0, 1.0]
        };
        let (pc, pe, pd) = with_darks(sig, p_dark, k_bar - n);
        c += pc;
        er += pe;
        dc += pd;
        pulses += pc * (k_bar - n + 1 + dead) as f64;
    }
    pulses += (1.0 - c) * (k_bar + 1) as f64;
    (c, er, dc, pulses)
}

/// Mean-field trusted model evaluated by brute force. A trial starts `o`
/// pulses into a block with probability `G(1−G)^o` (`o ≥ 1`), and the block is
/// drawn from those with more than `o` pulses in proportion to its mass.
/// The gain is iterated to a tight fixed point.
#[allow(clippy::too_many_arguments)]
pub fn mean_field_rates(
    p: f64,
    m_min: usize,
    m_max: usize,
    q: f64,
    coeffs: &dyn Fn(usize) -> Vec<f64>,
    eta_det: f64,
    p_dark: f64,
    m: usize,
    dead: usize,
) -> (f64, f64, f64) {
    let blocks = block_masses(p, m_min, m_max, q);
    let rewards: Vec<Vec<(f64, f64, f64, f64)>> = (0..=m_max)
        .map(|o| {
            blocks
                .iter()
                .map(|&(s, k, _)| {
                    if k >= o {
                        trial(s, k, o, coeffs, eta_det, p_dark, m, dead)
                    } else {
                        (0.0, 0.0, 0.0, 0.0)
                    }
                })
                .collect()
        })
        .collect();
    let mut g = 1.0 - (-p.max(1e-3)).exp();
    let mut totals = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..100_000 {
        let mut pd: Vec<f64> = (0..=m_max).map(|o| g * (1.0 - g).powi(o as i32)).collect();
        pd[0] = g + (1.0 - g).powi(m_max as i32 + 1);
        totals = (0.0, 0.0, 0.0, 0.0);
        for o in 0..=m_max {
            let tail: f64 = blocks.iter().filter(|b| b.1 >= o).map(|b| b.2).sum();
            if tail <= 0.0 {
                continue;
            }
            for (b, r) in blocks.iter().zip(&rewards[o]) {
                if b.1 < o {
                    continue;
                }
                let w = pd[o] * b.2 / tail;
                totals.0 += w * r.0;
                totals.1 += w * r.1;
                totals.2 += w * r.2;
                totals.3 += w * r.3;
            }
        }
        let next = totals.0 / totals.3;
        let done = (next - g).abs() <= 1e-15 * next.max(1e-300);
        g = next;
        if done {
            break;
        }
    }
    (g, totals.1 / totals.0, totals.2 / totals.3)
}

/// `2μ`-based USD success probability.
pub fn usd(mu: f64) -> f64 {
    1.0 - (-2.0 * mu).exp()
}
