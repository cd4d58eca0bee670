//! Deterministic lattice grids on probability simplices.

/// All ways to write `steps` as an ordered sum of `parts` nonnegative
/// integers, in lexicographic order. There are `C(steps + parts - 1, parts - 1)`.
pub fn compositions(parts: usize, steps: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if parts == 0 {
        return out;
    }
    let mut cur = vec![0usize; parts];
    fill(&mut cur, 0, steps, &mut out);
    out
}

fn fill(cur: &mut Vec<usize>, pos: usize, remaining: usize, out: &mut Vec<Vec<usize>>) {
    if pos + 1 == cur.len() {
        cur[pos] = remaining;
        out.push(cur.clone());
        return;
    }
    for v in 0..=remaining {
        cur[pos] = v;
        fill(cur, pos + 1, remaining - v, out);
    }
}

/// Probability vectors on the simplex lattice with spacing `1/steps`.
pub fn simplex_grid(parts: usize, steps: usize) -> Vec<Vec<f64>> {
    compositions(parts, steps)
        .into_iter()
        .map(|c| c.into_iter().map(|v| v as f64 / steps as f64).collect())
        .collect()
}

/// `C(n, k)` as a float, for sizing checks.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Nonincreasing sequences `1 >= a_1 >= … >= a_m >= 0` on the lattice
/// `j/steps`, in composition order.
pub fn nonincreasing_grid(m: usize, steps: usize) -> Vec<Vec<f64>> {
    // The gaps between consecutive values form a composition of `steps`.
    compositions(m + 1, steps)
        .into_iter()
        .map(|gaps| {
            let mut level = steps - gaps[0];
            let mut out = Vec::with_capacity(m);
            for g in &gaps[1..] {
                out.push(level as f64 / steps as f64);
                level -= g;
            }
            out
        })
        .collect()
}
