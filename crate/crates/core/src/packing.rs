//! Constructive packings: constant-weight set families with bounded pairwise
//! intersections, greedy Gilbert-Varshamov product codes, and the
//! `(2s, 2t)`-sparse 0/1 packing of a mixed-norm ball.
//!
//! Every constructor checks its own certificate before returning.

use std::collections::HashSet;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::norms::{lq_norm, mixed_norm_of_row_norms, ExponentPair, MixedArray, MixedShape};
use crate::rng;

/// Above this many words a code or packing is checked on sampled pairs.
pub const EXHAUSTIVE_LIMIT: usize = 10_000;
/// Number of pairs drawn when verification is sampled.
pub const SAMPLED_PAIRS: usize = 100_000;
/// Largest ambient space `theta^len` a full greedy scan will enumerate.
pub const MAX_ENUMERATED_WORDS: u64 = 1 << 27;

/// How a certificate was checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verification {
    Exhaustive { pairs: u64 },
    Sampled { pairs: u64, seed: u64 },
}

/// Subsets of `[ground_size]`, each of size `member_size`, any two sharing
/// fewer than `intersection_cap` elements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SetFamily {
    pub ground_size: usize,
    pub member_size: usize,
    pub intersection_cap: usize,
    /// Sorted member index lists.
    pub members: Vec<Vec<usize>>,
}

struct Bitset(Vec<u64>);

impl Bitset {
    fn from_indices(n: usize, idx: &[usize]) -> Self {
        let mut words = vec![0u64; n.div_ceil(64)];
        for &i in idx {
            words[i / 64] |= 1 << (i % 64);
        }
        Bitset(words)
    }

    fn intersection(&self, other: &Bitset) -> u32 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a & b).count_ones())
            .sum()
    }
}

impl SetFamily {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Exhaustive check of member sizes, ranges and pairwise intersections.
    pub fn verify(&self) -> Result<()> {
        for (k, member) in self.members.iter().enumerate() {
            if member.len() != self.member_size {
                return Err(Error::Certificate(format!(
                    "member {k} has {} elements",
                    member.len()
                )));
            }
            if member.windows(2).any(|w| w[0] >= w[1])
                || member.iter().any(|&i| i >= self.ground_size)
            {
                return Err(Error::Certificate(format!(
                    "member {k} is not a sorted subset of [{}]",
                    self.ground_size
                )));
            }
        }
        let sets: Vec<HashSet<usize>> = self
            .members
            .iter()
            .map(|m| m.iter().copied().collect())
            .collect();
        for i in 0..sets.len() {
            for j in i + 1..sets.len() {
                let common = sets[i].intersection(&sets[j]).count();
                if common >= self.intersection_cap {
                    return Err(Error::Certificate(format!(
                        "members {i} and {j} share {common} >= {} elements",
                        self.intersection_cap
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `ceil((n/(8 l))^l)`, at least 1.
pub fn default_family_target(n: usize, l: usize) -> usize {
    let v = (n as f64 / (8.0 * l as f64)).powi(l as i32);
    (v.ceil() as usize).max(1)
}

/// Draws `2l`-subsets of `[n]` uniformly and keeps those meeting every kept
/// member in fewer than `l` points, until `target` members are found.
///
/// Existence of `(n/(8l))^l` such sets is guaranteed; running out of
/// `max_attempts` is reported with the partial family.
pub fn build_set_family(
    n: usize,
    l: usize,
    target: Option<usize>,
    max_attempts: usize,
    seed: u64,
) -> Result<SetFamily> {
    if l == 0 || 2 * l > n {
        return Err(Error::invalid(format!(
            "need 1 <= l and 2l <= n, got l = {l}, n = {n}"
        )));
    }
    let target = target.unwrap_or_else(|| default_family_target(n, l));
    if target == 0 {
        return Err(Error::invalid("target size must be at least 1"));
    }
    let mut rng = rng::stream(seed, &[0x5e7]);
    let mut members: Vec<Vec<usize>> = Vec::with_capacity(target);
    let mut bits: Vec<Bitset> = Vec::with_capacity(target);
    let mut attempts = 0;
    while members.len() < target && attempts < max_attempts {
        attempts += 1;
        let mut candidate = index::sample(&mut rng, n, 2 * l).into_vec();
        candidate.sort_unstable();
        let cand_bits = Bitset::from_indices(n, &candidate);
        if bits
            .iter()
            .all(|b| (b.intersection(&cand_bits) as usize) < l)
        {
            members.push(candidate);
            bits.push(cand_bits);
        }
    }
    let family = SetFamily {
        ground_size: n,
        member_size: 2 * l,
        intersection_cap: l,
        members,
    };
    family.verify()?;
    if family.len() < target {
        return Err(Error::ConstructiveFailure {
            target,
            best: Box::new(family),
        });
    }
    Ok(family)
}

/// Word order for the greedy code scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanOrder {
    Lexicographic,
    /// A seeded uniform permutation of all words.
    Shuffled {
        seed: u64,
    },
}

/// Words of length `length` over `{0, .., alphabet_size - 1}` with pairwise
/// Hamming distance at least `min_distance`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductCode {
    pub length: usize,
    pub alphabet_size: usize,
    pub min_distance: usize,
    words: Vec<u32>,
    pub verification: Verification,
}

impl ProductCode {
    pub fn len(&self) -> usize {
        self.words.len() / self.length
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &[u32]> {
        self.words.chunks(self.length)
    }

    pub fn word(&self, i: usize) -> &[u32] {
        &self.words[i * self.length..(i + 1) * self.length]
    }

    /// Checks the distance floor over all pairs when that is affordable,
    /// otherwise on `SAMPLED_PAIRS` seeded random pairs.
    pub fn verify(&self, seed: u64) -> Result<Verification> {
        let n = self.len();
        let pairs = (n as u64) * (n as u64).saturating_sub(1) / 2;
        let space = space_size(self.alphabet_size, self.length);
        let ball = space.and_then(|_| {
            ball_volume(
                self.alphabet_size,
                self.length,
                self.min_distance.saturating_sub(1),
            )
        });
        let pair_cost = pairs.saturating_mul(self.length as u64);
        let ball_cost = match (space, ball) {
            (Some(s), Some(v)) if s <= MAX_ENUMERATED_WORDS => (n as u64)
                .saturating_mul(v)
                .saturating_mul(self.length as u64),
            _ => u64::MAX,
        };
        if n <= EXHAUSTIVE_LIMIT || ball_cost != u64::MAX {
            if ball_cost < pair_cost {
                self.verify_by_balls()?;
            } else {
                self.verify_pairs(0..n, |i| 0..i)?;
            }
            return Ok(Verification::Exhaustive { pairs });
        }
        let mut rng = rng::stream(seed, &[0xc0de]);
        for _ in 0..SAMPLED_PAIRS {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n - 1);
            let j = if j >= i { j + 1 } else { j };
            self.check_pair(i, j)?;
        }
        Ok(Verification::Sampled {
            pairs: SAMPLED_PAIRS as u64,
            seed,
        })
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        let dist = hamming(self.word(i), self.word(j));
        if dist < self.min_distance {
            return Err(Error::Certificate(format!(
                "words {i} and {j} at Hamming distance {dist} < {}",
                self.min_distance
            )));
        }
        Ok(())
    }

    fn verify_pairs<I: Iterator<Item = usize>>(
        &self,
        outer: std::ops::Range<usize>,
        inner: impl Fn(usize) -> I,
    ) -> Result<()> {
        for i in outer {
            for j in inner(i) {
                self.check_pair(i, j)?;
            }
        }
        Ok(())
    }

    /// For every codeword, walks its Hamming ball of radius `k - 1` and checks
    /// that no other codeword (and no duplicate) lives there.
    fn verify_by_balls(&self) -> Result<()> {
        let theta = self.alphabet_size as u64;
        let space =
            space_size(self.alphabet_size, self.length).expect("checked by caller") as usize;
        let mut owner = vec![u32::MAX; space];
        for (k, w) in self.words().enumerate() {
            let idx = word_index(w, theta) as usize;
            if owner[idx] != u32::MAX {
                return Err(Error::Certificate(format!(
                    "words {} and {k} coincide",
                    owner[idx]
                )));
            }
            owner[idx] = k as u32;
        }
        let radius = self.min_distance.saturating_sub(1);
        let mut scratch = vec![0u32; self.length];
        for (k, w) in self.words().enumerate() {
            scratch.copy_from_slice(w);
            let mut clash = None;
            for_each_in_ball(
                &mut scratch,
                self.alphabet_size as u32,
                radius,
                0,
                &mut |nb| {
                    let o = owner[word_index(nb, theta) as usize];
                    if o != u32::MAX && o != k as u32 {
                        clash = Some(o);
                    }
                },
            );
            if let Some(o) = clash {
                return Err(Error::Certificate(format!(
                    "words {k} and {o} closer than {}",
                    self.min_distance
                )));
            }
        }
        Ok(())
    }
}

fn hamming(a: &[u32], b: &[u32]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

fn space_size(theta: usize, length: usize) -> Option<u64> {
    (theta as u64).checked_pow(length as u32)
}

fn word_index(w: &[u32], theta: u64) -> u64 {
    w.iter().fold(0u64, |acc, &s| acc * theta + s as u64)
}

fn index_word(mut idx: u64, theta: u64, out: &mut [u32]) {
    for slot in out.iter_mut().rev() {
        *slot = (idx % theta) as u32;
        idx /= theta;
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `sum_{j <= radius} C(len, j) (theta - 1)^j`, if it fits in a `u64`.
fn ball_volume(theta: usize, length: usize, radius: usize) -> Option<u64> {
    let mut total = 0u64;
    for j in 0..=radius.min(length) {
        let c = binomial(length, j);
        let term = c * ((theta - 1) as f64).powi(j as i32);
        if term > 1.8e19 {
            return None;
        }
        total = total.checked_add(term.round() as u64)?;
    }
    Some(total)
}

/// Calls `f` on every word within Hamming distance `radius` of `w` whose
/// changes are at positions `>= start`. `w` is restored afterwards.
fn for_each_in_ball(
    w: &mut [u32],
    theta: u32,
    radius: usize,
    start: usize,
    f: &mut impl FnMut(&[u32]),
) {
    f(w);
    if radius == 0 {
        return;
    }
    for pos in start..w.len() {
        let orig = w[pos];
        for sym in 0..theta {
            if sym != orig {
                w[pos] = sym;
                for_each_in_ball(w, theta, radius - 1, pos + 1, f);
            }
        }
        w[pos] = orig;
    }
}

/// The Gilbert-Varshamov guarantee
/// `theta^len / sum_{j < k} C(len, j) (theta - 1)^j`, in natural log.
pub fn ln_gv_bound(theta: usize, length: usize, k: usize) -> f64 {
    let terms: Vec<f64> = (0..k)
        .map(|j| binomial(length, j).ln() + j as f64 * ((theta - 1) as f64).ln())
        .map(|t| if t.is_nan() { f64::NEG_INFINITY } else { t })
        .collect();
    let peak = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ln_sum = peak + terms.iter().map(|t| (t - peak).exp()).sum::<f64>().ln();
    length as f64 * (theta as f64).ln() - ln_sum
}

pub fn gv_bound(theta: usize, length: usize, k: usize) -> f64 {
    ln_gv_bound(theta, length, k).exp()
}

fn check_code_params(theta: usize, length: usize, k: usize) -> Result<()> {
    if theta < 2 || k == 0 || k > length {
        return Err(Error::invalid(format!(
            "need theta >= 2 and 1 <= k <= len; got theta={theta}, len={length}, k={k}"
        )));
    }
    if theta > u32::MAX as usize {
        return Err(Error::invalid("alphabet too large"));
    }
    Ok(())
}

/// Greedy code: scan every word in the given order and keep it iff it is at
/// distance `>= k` from all words kept so far. The result is a maximal code and
/// so meets the Gilbert-Varshamov bound.
///
/// Kept words mark their radius `k - 1` ball in a bitmap over the whole space,
/// which must have at most `MAX_ENUMERATED_WORDS` words.
pub fn gv_code(theta: usize, length: usize, k: usize, order: ScanOrder) -> Result<ProductCode> {
    check_code_params(theta, length, k)?;
    let space = space_size(theta, length)
        .filter(|&s| s <= MAX_ENUMERATED_WORDS)
        .ok_or_else(|| {
            Error::invalid(format!(
                "{theta}^{length} words is too many for a full greedy scan"
            ))
        })?;
    if k == 1 {
        // distinct words are always at distance >= 1, so greedy keeps them all
        return Ok(full_space_code(theta, length, space, order));
    }
    let mut excluded = vec![false; space as usize];
    let mut words = Vec::new();
    let mut scratch = vec![0u32; length];
    let mut visit = |idx: u64, words: &mut Vec<u32>, excluded: &mut Vec<bool>| {
        if excluded[idx as usize] {
            return;
        }
        index_word(idx, theta as u64, &mut scratch);
        words.extend_from_slice(&scratch);
        for_each_in_ball(&mut scratch, theta as u32, k - 1, 0, &mut |nb| {
            excluded[word_index(nb, theta as u64) as usize] = true;
        });
    };
    match order {
        ScanOrder::Lexicographic => {
            for idx in 0..space {
                visit(idx, &mut words, &mut excluded);
            }
        }
        ScanOrder::Shuffled { seed } => {
            let mut perm: Vec<u64> = (0..space).collect();
            perm.shuffle(&mut rng::stream(seed, &[0x9f]));
            for idx in perm {
                visit(idx, &mut words, &mut excluded);
            }
        }
    }
    finish_code(theta, length, k, words, 0)
}

fn full_space_code(theta: usize, length: usize, space: u64, order: ScanOrder) -> ProductCode {
    let mut indices: Vec<u64> = (0..space).collect();
    if let ScanOrder::Shuffled { seed } = order {
        indices.shuffle(&mut rng::stream(seed, &[0x9f]));
    }
    let mut words = vec![0u32; space as usize * length];
    for (chunk, &idx) in words.chunks_exact_mut(length).zip(&indices) {
        index_word(idx, theta as u64, chunk);
    }
    let n = space;
    ProductCode {
        length,
        alphabet_size: theta,
        min_distance: 1,
        words,
        // distinct indices give distinct words, which certifies every pair
        verification: Verification::Exhaustive {
            pairs: n * n.saturating_sub(1) / 2,
        },
    }
}

fn finish_code(
    theta: usize,
    length: usize,
    k: usize,
    words: Vec<u32>,
    seed: u64,
) -> Result<ProductCode> {
    let mut code = ProductCode {
        length,
        alphabet_size: theta,
        min_distance: k,
        words,
        verification: Verification::Exhaustive { pairs: 0 },
    };
    code.verification = code.verify(seed)?;
    Ok(code)
}

/// Greedy selection over uniformly drawn words (with replacement), stopping
/// once `limit` words are kept. Suited to astronomically large spaces where a
/// full scan is impossible but only a certified number of words is needed.
pub(crate) fn gv_code_sampled(
    theta: usize,
    length: usize,
    k: usize,
    limit: usize,
    max_attempts: usize,
    seed: u64,
) -> Result<ProductCode> {
    if theta == 1 {
        // a single word over a one-letter alphabet
        return finish_code(1, length, k, vec![0; length], seed);
    }
    check_code_params(theta, length, k)?;
    let mut rng = rng::stream(seed, &[0x6f]);
    let mut words: Vec<u32> = Vec::with_capacity(limit * length);
    let mut candidate = vec![0u32; length];
    let mut attempts = 0;
    while words.len() / length < limit {
        if attempts == max_attempts {
            return Err(Error::Certificate(format!(
                "greedy code stalled at {} of {limit} words",
                words.len() / length
            )));
        }
        attempts += 1;
        for s in candidate.iter_mut() {
            *s = rng.random_range(0..theta as u32);
        }
        if words.chunks(length).all(|w| hamming(w, &candidate) >= k) {
            words.extend_from_slice(&candidate);
        }
    }
    finish_code(theta, length, k, words, seed)
}

/// A `(2s, 2t)`-sparse 0/1 vector stored as its row supports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SparseBinary {
    /// `(row, sorted columns)` with rows increasing.
    pub rows: Vec<(usize, Vec<usize>)>,
}

impl SparseBinary {
    pub fn to_array(&self, shape: MixedShape) -> MixedArray {
        let mut x = MixedArray::zeros(shape);
        for (i, cols) in &self.rows {
            for &j in cols {
                x.set(*i, j, 1.0);
            }
        }
        x
    }

    fn row_norms(&self, b: usize, q: crate::norms::Exponent) -> Vec<f64> {
        let mut norms = vec![0.0; b];
        for (i, cols) in &self.rows {
            norms[*i] = lq_norm(std::iter::repeat_n(1.0, cols.len()), q);
        }
        norms
    }

    /// `||self||` in `l_p(l_q)`.
    pub fn norm(&self, b: usize, e: ExponentPair) -> f64 {
        mixed_norm_of_row_norms(&self.row_norms(b, e.q), e.p)
    }

    /// `||self - other||` in `l_r(l_u)`, from per-row symmetric differences.
    pub fn distance(&self, other: &SparseBinary, b: usize, e: ExponentPair) -> f64 {
        let mut diff = vec![0usize; b];
        let (mut a, mut c) = (self.rows.iter().peekable(), other.rows.iter().peekable());
        loop {
            match (a.peek(), c.peek()) {
                (Some((ia, ca)), Some((ic, cc))) if ia == ic => {
                    diff[*ia] = symmetric_difference(ca, cc);
                    a.next();
                    c.next();
                }
                (Some((ia, ca)), Some((ic, _))) if ia < ic => {
                    diff[*ia] = ca.len();
                    a.next();
                }
                (Some(_), Some((ic, cc))) => {
                    diff[*ic] = cc.len();
                    c.next();
                }
                (Some((ia, ca)), None) => {
                    diff[*ia] = ca.len();
                    a.next();
                }
                (None, Some((ic, cc))) => {
                    diff[*ic] = cc.len();
                    c.next();
                }
                (None, None) => break,
            }
        }
        let norms: Vec<f64> = diff
            .iter()
            .map(|&n| lq_norm(std::iter::repeat_n(1.0, n), e.q))
            .collect();
        mixed_norm_of_row_norms(&norms, e.p)
    }
}

fn symmetric_difference(a: &[usize], b: &[usize]) -> usize {
    let common = a.iter().filter(|x| b.binary_search(x).is_ok()).count();
    a.len() + b.len() - 2 * common
}

/// A certified packing of `(2s, 2t)`-sparse 0/1 arrays.
#[derive(Debug, Clone, Serialize)]
pub struct PackingFamily {
    pub shape: MixedShape,
    pub vectors: Vec<SparseBinary>,
    pub outer_s: usize,
    pub inner_t: usize,
    /// Certified floor `s^(1/r) (2t)^(1/u)` on pairwise distances.
    pub distance_floor: f64,
    pub measured_in: ExponentPair,
    /// Certified cap `(2s)^(1/p) (2t)^(1/q)` on norms.
    pub radius_cap: f64,
    pub radius_in: ExponentPair,
    /// Smallest pairwise distance among the checked pairs.
    pub observed_min_distance: f64,
    pub observed_max_radius: f64,
    pub verification: Verification,
    pub seed: u64,
}

impl PackingFamily {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Dense view of member `i`.
    pub fn array(&self, i: usize) -> MixedArray {
        self.vectors[i].to_array(self.shape)
    }

    /// `(b/(32 s))^s (d/(8 t))^(s t)`.
    pub fn cardinality_floor(&self) -> f64 {
        packing_cardinality_floor(self.shape, self.outer_s, self.inner_t)
    }
}

pub fn packing_cardinality_floor(shape: MixedShape, s: usize, t: usize) -> f64 {
    let (s_f, t_f) = (s as f64, t as f64);
    (shape.b as f64 / (32.0 * s_f)).powf(s_f) * (shape.d as f64 / (8.0 * t_f)).powf(s_f * t_f)
}

const FAMILY_ATTEMPTS: usize = 1_000_000;
const CODE_ATTEMPTS: usize = 10_000_000;

/// Three-stage construction of a large well-separated set of structured
/// sparse 0/1 arrays:
///
/// 1. a family `A` of `2t`-subsets of `[d]` with pairwise intersections `< t`;
/// 2. a code over `A^(2s)` with Hamming distance `>= s`, so any two codewords
///    differ (with small overlap) in at least `s` of their `2s` rows;
/// 3. a family of `2s`-subsets of `[b]` with intersections `< s` choosing the
///    rows that carry each codeword.
///
/// Stages stop at the sizes that certify `(b/(32 s))^s (d/(8 t))^(s t)`
/// members: `ceil((b/(8s))^s)` row sets and `ceil((d/(8t))^(st)/4^s)` codewords.
pub fn build_sparse_packing(
    b: usize,
    d: usize,
    s: usize,
    t: usize,
    radius_in: ExponentPair,
    measured_in: ExponentPair,
    seed: u64,
) -> Result<PackingFamily> {
    if b < 8 || d < 8 {
        return Err(Error::invalid(format!(
            "packing needs b, d >= 8, got {b}x{d}"
        )));
    }
    if s == 0 || s > b / 8 || t == 0 || t > d / 8 {
        return Err(Error::invalid(format!(
            "packing needs 1 <= s <= {} and 1 <= t <= {}, got s={s}, t={t}",
            b / 8,
            d / 8
        )));
    }
    let shape = MixedShape::new(b, d)?;
    let inner = build_set_family(d, t, None, FAMILY_ATTEMPTS, rng::derive_seed(seed, &[1]))?;
    let outer = build_set_family(b, s, None, FAMILY_ATTEMPTS, rng::derive_seed(seed, &[2]))?;

    let codewords_needed = {
        let v = (d as f64 / (8.0 * t as f64)).powf((s * t) as f64) / 4f64.powi(s as i32);
        (v.ceil() as usize).max(1)
    };
    let code = gv_code_sampled(
        inner.len(),
        2 * s,
        s,
        codewords_needed,
        CODE_ATTEMPTS,
        rng::derive_seed(seed, &[3]),
    )?;

    let mut vectors = Vec::with_capacity(outer.len() * code.len());
    for rows in &outer.members {
        for word in code.words() {
            let support = rows
                .iter()
                .zip(word)
                .map(|(&row, &sym)| (row, inner.members[sym as usize].clone()))
                .collect();
            vectors.push(SparseBinary { rows: support });
        }
    }

    let distance_floor =
        (s as f64).powf(measured_in.p.recip()) * ((2 * t) as f64).powf(measured_in.q.recip());
    let radius_cap =
        ((2 * s) as f64).powf(radius_in.p.recip()) * ((2 * t) as f64).powf(radius_in.q.recip());
    let mut family = PackingFamily {
        shape,
        vectors,
        outer_s: s,
        inner_t: t,
        distance_floor,
        measured_in,
        radius_cap,
        radius_in,
        observed_min_distance: f64::INFINITY,
        observed_max_radius: 0.0,
        verification: Verification::Exhaustive { pairs: 0 },
        seed,
    };
    verify_packing(&mut family)?;
    Ok(family)
}

const REL_SLACK: f64 = 1e-12;

/// Checks sparsity and radius of every member and the distance floor over all
/// pairs (seeded sample of pairs above `EXHAUSTIVE_LIMIT` members).
pub fn verify_packing(family: &mut PackingFamily) -> Result<()> {
    let b = family.shape.b;
    let (s, t) = (family.outer_s, family.inner_t);
    let mut max_radius = 0.0f64;
    for (k, v) in family.vectors.iter().enumerate() {
        let rows_ok = v.rows.len() <= 2 * s && v.rows.windows(2).all(|w| w[0].0 < w[1].0);
        let cols_ok = v
            .rows
            .iter()
            .all(|(i, c)| *i < b && c.len() <= 2 * t && c.iter().all(|&j| j < family.shape.d));
        if !(rows_ok && cols_ok) {
            return Err(Error::Certificate(format!(
                "member {k} is not ({}, {})-sparse",
                2 * s,
                2 * t
            )));
        }
        let r = v.norm(b, family.radius_in);
        if r > family.radius_cap * (1.0 + REL_SLACK) {
            return Err(Error::Certificate(format!(
                "member {k} has radius {r} > {}",
                family.radius_cap
            )));
        }
        max_radius = max_radius.max(r);
    }
    let n = family.len();
    let floor = family.distance_floor * (1.0 - REL_SLACK);
    let mut min_dist = f64::INFINITY;
    let mut check = |i: usize, j: usize| -> Result<()> {
        let dist = family.vectors[i].distance(&family.vectors[j], b, family.measured_in);
        if dist < floor {
            return Err(Error::Certificate(format!(
                "members {i} and {j} at distance {dist} < {}",
                family.distance_floor
            )));
        }
        min_dist = min_dist.min(dist);
        Ok(())
    };
    let verification = if n <= EXHAUSTIVE_LIMIT {
        for i in 0..n {
            for j in 0..i {
                check(i, j)?;
            }
        }
        Verification::Exhaustive {
            pairs: (n as u64) * (n as u64).saturating_sub(1) / 2,
        }
    } else {
        let mut rng = rng::stream(family.seed, &[0xfeed]);
        for _ in 0..SAMPLED_PAIRS {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n - 1);
            check(i, if j >= i { j + 1 } else { j })?;
        }
        Verification::Sampled {
            pairs: SAMPLED_PAIRS as u64,
            seed: family.seed,
        }
    };
    family.observed_min_distance = min_dist;
    family.observed_max_radius = max_radius;
    family.verification = verification;
    Ok(())
}

/// `alpha^n (1 + 2/eps)^n`, the volumetric cap on any `eps`-packing of a
/// subset of a unit quasi-norm ball with quasi-norm constant `alpha`.
pub fn volume_packing_cap(n: usize, alpha: f64, eps: f64) -> Result<f64> {
    Ok(ln_volume_packing_cap(n, alpha, eps)?.exp())
}

pub fn ln_volume_packing_cap(n: usize, alpha: f64, eps: f64) -> Result<f64> {
    if n == 0 || alpha < 1.0 || eps <= 0.0 {
        return Err(Error::invalid("need n >= 1, alpha >= 1, eps > 0"));
    }
    Ok(n as f64 * (alpha.ln() + (1.0 + 2.0 / eps).ln()))
}

/// `m log(alpha + 2 c alpha radius / eps)`, the cap on `log P(U, eps)` when
/// `A` has `m` rows and satisfies the null-space condition with constant `c`.
/// Without an explicit `c`, uses `alpha * beta`.
pub fn quotient_packing_cap(
    m: usize,
    alpha: f64,
    beta: f64,
    radius: f64,
    eps: f64,
    c: Option<f64>,
) -> Result<f64> {
    if m == 0 || eps <= 0.0 || radius < 0.0 || alpha < 1.0 {
        return Err(Error::invalid(
            "need m >= 1, eps > 0, radius >= 0, alpha >= 1",
        ));
    }
    let c = c.unwrap_or(alpha * beta);
    Ok(m as f64 * (alpha + 2.0 * c * alpha * radius / eps).ln())
}
