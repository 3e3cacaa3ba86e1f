//! Brute-force reference implementations written against plain `String`s,
//! sharing no code with the library.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;

pub fn chars(s: &str) -> Vec<char> {
    s.chars().collect()
}

/// Window of radius `m` around `i`, read through the seam.
pub fn window(s: &[char], i: usize, m: usize) -> String {
    let n = s.len() as isize;
    (-(m as isize)..=m as isize)
        .map(|k| s[((i as isize + k).rem_euclid(n)) as usize])
        .collect()
}

fn iso(a: &str, b: &str) -> bool {
    a == b || a.chars().rev().collect::<String>() == b
}

pub fn max_r(n: usize) -> usize {
    if n.is_multiple_of(2) {
        (n / 2).saturating_sub(1)
    } else {
        (n - 1) / 2
    }
}

/// Absolute indifference per position, scanning every radius for every pair.
pub fn a_vector(text: &str) -> Vec<usize> {
    let s = chars(text);
    let n = s.len();
    let top = max_r(n);
    (0..n)
        .map(|i| {
            let mut worst = 0;
            for j in (0..n).filter(|&j| j != i) {
                match (1..=top).find(|&m| !iso(&window(&s, i, m), &window(&s, j, m))) {
                    Some(r) => worst = worst.max(r),
                    None => return 0,
                }
            }
            worst
        })
        .collect()
}

pub fn leibnizian(text: &str) -> bool {
    let a = a_vector(text);
    !a.is_empty() && a.iter().all(|&x| x > 0)
}

pub fn variety(text: &str) -> Ratio<i128> {
    let a = a_vector(text);
    if a.is_empty() || a.contains(&0) {
        return Ratio::from_integer(0);
    }
    a.iter().map(|&x| Ratio::new(1, x as i128)).sum()
}

/// Every length-`n` word over `letters`, lexicographic.
pub fn all_words(letters: &[char], n: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    for _ in 0..n {
        out = out
            .iter()
            .flat_map(|w| letters.iter().map(move |c| format!("{w}{c}")))
            .collect();
    }
    out
}

/// Linear-match, literal-identity layers of a multiway expansion.
pub fn expand_layers(root: &str, rules: &[(&str, &str)], depth: usize) -> Vec<BTreeSet<String>> {
    let mut layers = vec![BTreeSet::from([root.to_string()])];
    for _ in 0..depth {
        let mut next = BTreeSet::new();
        for w in layers.last().unwrap() {
            for (lhs, rhs) in rules {
                let mut start = 0;
                while let Some(k) = w[start..].find(lhs) {
                    let p = start + k;
                    next.insert(format!("{}{}{}", &w[..p], rhs, &w[p + lhs.len()..]));
                    start = p + 1;
                }
            }
        }
        if next.is_empty() {
            break;
        }
        layers.push(next);
    }
    layers
}

/// Directed edges (parent, child) of the same expansion.
pub fn expand_edges(
    layers: &[BTreeSet<String>],
    rules: &[(&str, &str)],
) -> Vec<BTreeSet<(String, String)>> {
    layers
        .windows(2)
        .map(|pair| {
            let mut edges = BTreeSet::new();
            for w in &pair[0] {
                for (lhs, rhs) in rules {
                    let mut start = 0;
                    while let Some(k) = w[start..].find(lhs) {
                        let p = start + k;
                        edges.insert((
                            w.clone(),
                            format!("{}{}{}", &w[..p], rhs, &w[p + lhs.len()..]),
                        ));
                        start = p + 1;
                    }
                }
            }
            edges
        })
        .collect()
}

/// Views of a Leibnizian word: the window at each position's own radius.
pub fn views(text: &str) -> Vec<String> {
    let s = chars(text);
    a_vector(text)
        .iter()
        .enumerate()
        .map(|(i, &a)| window(&s, i, a))
        .collect()
}

/// Canonical-ensemble occupation of every view by a double loop.
pub fn occupations(words: &[String], beta: f64, gamma: f64) -> BTreeMap<String, f64> {
    let weights: Vec<f64> = words
        .iter()
        .map(|w| {
            let v = variety(w);
            (-beta * gamma * (*v.numer() as f64 / *v.denom() as f64)).exp()
        })
        .collect();
    let z: f64 = weights.iter().sum();
    let per_word: Vec<Vec<String>> = words.iter().map(|w| views(w)).collect();
    let all: BTreeSet<String> = per_word.iter().flatten().cloned().collect();
    all.into_iter()
        .map(|view| {
            let mut hit = 0.0;
            for (vs, wt) in per_word.iter().zip(&weights) {
                if vs.contains(&view) {
                    hit += wt;
                }
            }
            (view, hit / z)
        })
        .collect()
}
