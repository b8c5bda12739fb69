//! Comparison spaces for biometric templates.
//!
//! Five comparison functions are supported: Hamming and Levenshtein
//! distances over strings, and the Euclidean, Chebyshev, and cosine
//! measures over real vectors. The first four are metrics; cosine
//! similarity violates the triangle inequality and is tracked with a
//! [`Orientation::Similarity`] tag instead of being bent into a
//! pseudo-distance.

use thiserror::Error;

/// Absolute tolerance used when comparing real-valued scores for equality.
pub const REAL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("non-finite input value")]
    NonFiniteInput,
    #[error("cosine similarity is undefined for a zero vector")]
    ZeroVector,
    #[error("point variant does not match the space: expected {expected}, got {got}")]
    VariantMismatch {
        expected: &'static str,
        got: &'static str,
    },
}

/// A value in one of the supported comparison spaces.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricPoint {
    /// Ordered bits of a fixed length.
    BitString(Vec<bool>),
    /// Ordered symbols from a finite alphabet, bounded length.
    SymbolString(String),
    /// Ordered reals of a fixed dimension.
    RealVector(Vec<f64>),
}

impl MetricPoint {
    pub fn variant_name(&self) -> &'static str {
        match self {
            MetricPoint::BitString(_) => "bit-string",
            MetricPoint::SymbolString(_) => "symbol-string",
            MetricPoint::RealVector(_) => "real-vector",
        }
    }

    /// Bit count, symbol count, or dimension depending on the variant.
    pub fn len(&self) -> usize {
        match self {
            MetricPoint::BitString(bits) => bits.len(),
            MetricPoint::SymbolString(s) => s.chars().count(),
            MetricPoint::RealVector(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Which comparison function a space uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    Hamming,
    Levenshtein,
    Euclidean,
    Chebyshev,
    CosineSimilarity,
}

impl SpaceKind {
    /// Expected point variant for this kind.
    pub fn variant_name(self) -> &'static str {
        match self {
            SpaceKind::Hamming => "bit-string",
            SpaceKind::Levenshtein => "symbol-string",
            SpaceKind::Euclidean | SpaceKind::Chebyshev | SpaceKind::CosineSimilarity => {
                "real-vector"
            }
        }
    }
}

/// Whether a score improves downward (distance) or upward (similarity).
///
/// Thresholding flips direction with the orientation instead of converting
/// similarities into pseudo-distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    Distance,
    Similarity,
}

/// Describes the space all points of a system live in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpaceDescriptor {
    pub kind: SpaceKind,
    /// Bit length, maximum string length, or vector dimension.
    pub dimension: usize,
}

impl SpaceDescriptor {
    /// # Panics
    ///
    /// Panics when `dimension` is zero.
    pub fn new(kind: SpaceKind, dimension: usize) -> Self {
        assert!(dimension > 0, "space dimension must be positive");
        SpaceDescriptor { kind, dimension }
    }

    /// Similarity exactly for cosine, distance for everything else.
    pub fn orientation(&self) -> Orientation {
        match self.kind {
            SpaceKind::CosineSimilarity => Orientation::Similarity,
            _ => Orientation::Distance,
        }
    }

    /// Checks that a point has the variant and dimension this space expects.
    ///
    /// Bit strings must have exactly the declared length, real vectors the
    /// declared dimension with finite entries, and symbol strings at most
    /// the declared length.
    pub fn validate_point(&self, point: &MetricPoint) -> Result<(), MetricError> {
        let expected = self.kind.variant_name();
        if point.variant_name() != expected {
            return Err(MetricError::VariantMismatch {
                expected,
                got: point.variant_name(),
            });
        }
        match point {
            MetricPoint::BitString(bits) => {
                if bits.len() != self.dimension {
                    return Err(MetricError::DimensionMismatch {
                        left: bits.len(),
                        right: self.dimension,
                    });
                }
            }
            MetricPoint::SymbolString(s) => {
                let len = s.chars().count();
                if len > self.dimension {
                    return Err(MetricError::DimensionMismatch {
                        left: len,
                        right: self.dimension,
                    });
                }
            }
            MetricPoint::RealVector(v) => {
                if v.len() != self.dimension {
                    return Err(MetricError::DimensionMismatch {
                        left: v.len(),
                        right: self.dimension,
                    });
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(MetricError::NonFiniteInput);
                }
            }
        }
        Ok(())
    }
}

/// Number of positions at which two equal-length bit strings differ.
pub fn hamming_distance(x: &[bool], y: &[bool]) -> Result<u64, MetricError> {
    if x.len() != y.len() {
        return Err(MetricError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(x.iter().zip(y).filter(|(a, b)| a != b).count() as u64)
}

/// Count of nonzero bits.
pub fn hamming_weight(x: &[bool]) -> u64 {
    x.iter().filter(|&&b| b).count() as u64
}

/// Position-wise XOR; `hamming_distance(x, y) == hamming_weight(xor(x, y))`.
pub fn bitwise_xor(x: &[bool], y: &[bool]) -> Result<Vec<bool>, MetricError> {
    if x.len() != y.len() {
        return Err(MetricError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(x.iter().zip(y).map(|(a, b)| a != b).collect())
}

/// Smallest number of single-character insertions, deletions, or
/// substitutions turning `x` into `y`.
///
/// Computed with the iterative single-row dynamic-programming table in
/// O(|x|·|y|) time; empty strings are allowed.
pub fn levenshtein_distance(x: &str, y: &str) -> usize {
    let xs: Vec<char> = x.chars().collect();
    let ys: Vec<char> = y.chars().collect();
    if xs.is_empty() {
        return ys.len();
    }
    if ys.is_empty() {
        return xs.len();
    }
    // row[j] = distance between the current prefix of x and y[..j]
    let mut row: Vec<usize> = (0..=ys.len()).collect();
    for (i, cx) in xs.iter().enumerate() {
        let mut diagonal = row[0];
        row[0] = i + 1;
        for (j, cy) in ys.iter().enumerate() {
            let above = row[j + 1];
            let substitution = diagonal + usize::from(cx != cy);
            row[j + 1] = substitution.min(above + 1).min(row[j] + 1);
            diagonal = above;
        }
    }
    row[ys.len()]
}

fn check_real_pair(x: &[f64], y: &[f64]) -> Result<(), MetricError> {
    if x.len() != y.len() {
        return Err(MetricError::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(MetricError::NonFiniteInput);
    }
    Ok(())
}

/// ℓ2 distance `sqrt(Σ (xᵢ − yᵢ)²)`.
pub fn euclidean_distance(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    check_real_pair(x, y)?;
    let sum: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sum.sqrt())
}

/// ℓ∞ distance `maxᵢ |xᵢ − yᵢ|`.
pub fn chebyshev_distance(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    check_real_pair(x, y)?;
    Ok(x.iter()
        .zip(y)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// `⟨x, y⟩ / (‖x‖₂ ‖y‖₂)`, in [−1, 1]; errors on zero vectors.
pub fn cosine_similarity(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    check_real_pair(x, y)?;
    let mut dot = 0.0;
    let mut norm_x = 0.0;
    let mut norm_y = 0.0;
    for (a, b) in x.iter().zip(y) {
        dot += a * b;
        norm_x += a * a;
        norm_y += b * b;
    }
    if norm_x == 0.0 || norm_y == 0.0 {
        return Err(MetricError::ZeroVector);
    }
    // Rounding can push the quotient a hair outside [-1, 1].
    Ok((dot / (norm_x.sqrt() * norm_y.sqrt())).clamp(-1.0, 1.0))
}

/// Routes a pair of conforming points to the space's comparison function.
///
/// The returned score carries the descriptor's orientation: a distance for
/// every kind except [`SpaceKind::CosineSimilarity`].
pub fn compare(
    space: &SpaceDescriptor,
    x: &MetricPoint,
    y: &MetricPoint,
) -> Result<f64, MetricError> {
    space.validate_point(x)?;
    space.validate_point(y)?;
    match (space.kind, x, y) {
        (SpaceKind::Hamming, MetricPoint::BitString(a), MetricPoint::BitString(b)) => {
            Ok(hamming_distance(a, b)? as f64)
        }
        (SpaceKind::Levenshtein, MetricPoint::SymbolString(a), MetricPoint::SymbolString(b)) => {
            Ok(levenshtein_distance(a, b) as f64)
        }
        (SpaceKind::Euclidean, MetricPoint::RealVector(a), MetricPoint::RealVector(b)) => {
            euclidean_distance(a, b)
        }
        (SpaceKind::Chebyshev, MetricPoint::RealVector(a), MetricPoint::RealVector(b)) => {
            chebyshev_distance(a, b)
        }
        (SpaceKind::CosineSimilarity, MetricPoint::RealVector(a), MetricPoint::RealVector(b)) => {
            cosine_similarity(a, b)
        }
        // validate_point already rejected mismatched variants
        _ => unreachable!("validated points match the space kind"),
    }
}

#[cfg(test)]
pub(crate) fn bits(s: &str) -> Vec<bool> {
    s.chars().map(|c| c == '1').collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The defining recursion of the edit distance, used as the oracle
    /// for the iterative implementation.
    fn levenshtein_recursive(x: &[char], y: &[char], i: usize, j: usize) -> usize {
        if i.min(j) == 0 {
            return i.max(j);
        }
        let deletion = levenshtein_recursive(x, y, i - 1, j) + 1;
        let insertion = levenshtein_recursive(x, y, i, j - 1) + 1;
        let substitution =
            levenshtein_recursive(x, y, i - 1, j - 1) + usize::from(x[i - 1] != y[j - 1]);
        deletion.min(insertion).min(substitution)
    }

    fn lev_oracle(x: &str, y: &str) -> usize {
        let xs: Vec<char> = x.chars().collect();
        let ys: Vec<char> = y.chars().collect();
        levenshtein_recursive(&xs, &ys, xs.len(), ys.len())
    }

    #[test]
    fn hamming_identity_and_full_flip() {
        assert_eq!(hamming_distance(&bits("000"), &bits("000")).unwrap(), 0);
        assert_eq!(hamming_distance(&bits("1010"), &bits("0101")).unwrap(), 4);
    }

    #[test]
    fn hamming_hand_counted_pair() {
        let x = bits("10110");
        let y = bits("10011");
        // position-by-position hand check
        let mut expected = 0;
        for i in 0..x.len() {
            if x[i] != y[i] {
                expected += 1;
            }
        }
        assert_eq!(expected, 2);
        assert_eq!(hamming_distance(&x, &y).unwrap(), 2);
    }

    #[test]
    fn hamming_length_mismatch() {
        assert_eq!(
            hamming_distance(&bits("10"), &bits("101")),
            Err(MetricError::LengthMismatch { left: 2, right: 3 })
        );
    }

    #[test]
    fn weight_cases() {
        assert_eq!(hamming_weight(&bits("0000")), 0);
        assert_eq!(hamming_weight(&bits("1111")), 4);
        assert_eq!(hamming_weight(&bits("1010")), 2);
    }

    #[test]
    fn distance_is_weight_of_xor() {
        let x = bits("1011010011");
        let y = bits("0011011101");
        let xored = bitwise_xor(&x, &y).unwrap();
        assert_eq!(hamming_distance(&x, &y).unwrap(), hamming_weight(&xored));

        // and over random pairs
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let n = rng.random_range(1..64);
            let x: Vec<bool> = (0..n).map(|_| rng.random()).collect();
            let y: Vec<bool> = (0..n).map(|_| rng.random()).collect();
            assert_eq!(
                hamming_distance(&x, &y).unwrap(),
                hamming_weight(&bitwise_xor(&x, &y).unwrap())
            );
        }
    }

    #[test]
    fn levenshtein_base_and_identity() {
        assert_eq!(levenshtein_distance("", "abc"), 3);
        assert_eq!(levenshtein_distance("abc", ""), 3);
        assert_eq!(levenshtein_distance("abc", "abc"), 0);
        assert_eq!(levenshtein_distance("", ""), 0);
    }

    #[test]
    fn levenshtein_kitten_sitting() {
        assert_eq!(lev_oracle("kitten", "sitting"), 3);
        assert_eq!(levenshtein_distance("kitten", "sitting"), 3);
    }

    #[test]
    fn levenshtein_matches_recursive_oracle_exhaustively() {
        // every pair of strings of length <= 3 over {a, b, c}
        let mut strings = vec![String::new()];
        let mut frontier = vec![String::new()];
        for _ in 0..3 {
            let mut next = Vec::new();
            for s in &frontier {
                for c in ['a', 'b', 'c'] {
                    let mut t = s.clone();
                    t.push(c);
                    next.push(t);
                }
            }
            strings.extend(next.iter().cloned());
            frontier = next;
        }
        assert_eq!(strings.len(), 40);
        for x in &strings {
            for y in &strings {
                assert_eq!(
                    levenshtein_distance(x, y),
                    lev_oracle(x, y),
                    "mismatch for ({x:?}, {y:?})"
                );
            }
        }
    }

    #[test]
    fn euclidean_cases() {
        assert_eq!(euclidean_distance(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(euclidean_distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        // term-by-term: (2-1)^2 + (3-1)^2 + (4-1)^2 = 1 + 4 + 9 = 14
        let d = euclidean_distance(&[1.0, 1.0, 1.0], &[2.0, 3.0, 4.0]).unwrap();
        assert!((d - 14.0_f64.sqrt()).abs() < REAL_TOLERANCE);
        assert!((d - 3.7417).abs() < 1e-4);
    }

    #[test]
    fn euclidean_errors() {
        assert_eq!(
            euclidean_distance(&[1.0], &[1.0, 2.0]),
            Err(MetricError::DimensionMismatch { left: 1, right: 2 })
        );
        assert_eq!(
            euclidean_distance(&[f64::NAN], &[1.0]),
            Err(MetricError::NonFiniteInput)
        );
        assert_eq!(
            euclidean_distance(&[1.0], &[f64::INFINITY]),
            Err(MetricError::NonFiniteInput)
        );
    }

    #[test]
    fn chebyshev_cases() {
        assert_eq!(chebyshev_distance(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(chebyshev_distance(&[1.0, 2.0], &[4.0, 3.0]).unwrap(), 3.0);
        // coordinate-wise: |0-2| = 2, |5-1| = 4, |-2 - -2| = 0
        assert_eq!(
            chebyshev_distance(&[0.0, 5.0, -2.0], &[2.0, 1.0, -2.0]).unwrap(),
            4.0
        );
    }

    #[test]
    fn cosine_cases() {
        let x = [1.0, 2.0];
        assert!((cosine_similarity(&x, &x).unwrap() - 1.0).abs() < REAL_TOLERANCE);
        assert!((cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap()).abs() < REAL_TOLERANCE);
        assert!(
            (cosine_similarity(&[1.0, 1.0], &[-1.0, -1.0]).unwrap() + 1.0).abs() < REAL_TOLERANCE
        );
        assert_eq!(
            cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]),
            Err(MetricError::ZeroVector)
        );
    }

    #[test]
    fn cosine_triangle_inequality_counterexample() {
        // Under d(x, y) = 1 - cos(x, y) the triple below violates
        // d(x, z) <= d(x, y) + d(y, z), so cosine defines no metric space.
        let x = [1.0, 0.0];
        let y = [1.0, 1.0];
        let z = [0.0, 1.0];
        let d_xz = 1.0 - cosine_similarity(&x, &z).unwrap();
        let d_xy = 1.0 - cosine_similarity(&x, &y).unwrap();
        let d_yz = 1.0 - cosine_similarity(&y, &z).unwrap();
        assert!(d_xz > d_xy + d_yz + 0.4);
    }

    #[test]
    fn compare_delegates() {
        let hamming = SpaceDescriptor::new(SpaceKind::Hamming, 4);
        assert_eq!(
            compare(
                &hamming,
                &MetricPoint::BitString(bits("1010")),
                &MetricPoint::BitString(bits("0101"))
            )
            .unwrap(),
            4.0
        );
        let euclid = SpaceDescriptor::new(SpaceKind::Euclidean, 2);
        assert_eq!(
            compare(
                &euclid,
                &MetricPoint::RealVector(vec![0.0, 0.0]),
                &MetricPoint::RealVector(vec![3.0, 4.0])
            )
            .unwrap(),
            5.0
        );
        let cosine = SpaceDescriptor::new(SpaceKind::CosineSimilarity, 2);
        assert_eq!(
            compare(
                &cosine,
                &MetricPoint::RealVector(vec![1.0, 0.0]),
                &MetricPoint::RealVector(vec![1.0, 0.0])
            )
            .unwrap(),
            1.0
        );
    }

    #[test]
    fn compare_rejects_wrong_variant_and_dimension() {
        let euclid = SpaceDescriptor::new(SpaceKind::Euclidean, 2);
        assert_eq!(
            compare(
                &euclid,
                &MetricPoint::BitString(bits("10")),
                &MetricPoint::RealVector(vec![0.0, 0.0])
            ),
            Err(MetricError::VariantMismatch {
                expected: "real-vector",
                got: "bit-string"
            })
        );
        assert_eq!(
            compare(
                &euclid,
                &MetricPoint::RealVector(vec![0.0]),
                &MetricPoint::RealVector(vec![0.0, 0.0])
            ),
            Err(MetricError::DimensionMismatch { left: 1, right: 2 })
        );
    }

    #[test]
    fn orientation_follows_kind() {
        for kind in [
            SpaceKind::Hamming,
            SpaceKind::Levenshtein,
            SpaceKind::Euclidean,
            SpaceKind::Chebyshev,
        ] {
            assert_eq!(
                SpaceDescriptor::new(kind, 4).orientation(),
                Orientation::Distance
            );
        }
        assert_eq!(
            SpaceDescriptor::new(SpaceKind::CosineSimilarity, 4).orientation(),
            Orientation::Similarity
        );
    }

    #[test]
    fn symbol_string_respects_maximum_length() {
        let lev = SpaceDescriptor::new(SpaceKind::Levenshtein, 3);
        assert!(lev
            .validate_point(&MetricPoint::SymbolString("ab".into()))
            .is_ok());
        assert!(lev
            .validate_point(&MetricPoint::SymbolString("abcd".into()))
            .is_err());
    }

    #[test]
    fn chebyshev_euclidean_norm_sandwich() {
        // chebyshev <= euclidean <= sqrt(n) * chebyshev over random pairs
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..500 {
            let n = rng.random_range(1..12);
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-100.0..100.0)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-100.0..100.0)).collect();
            let che = chebyshev_distance(&x, &y).unwrap();
            let euc = euclidean_distance(&x, &y).unwrap();
            assert!(che <= euc + REAL_TOLERANCE);
            assert!(euc <= (n as f64).sqrt() * che + REAL_TOLERANCE);
        }
    }

    #[test]
    fn cosine_stays_in_range_on_random_pairs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        for _ in 0..500 {
            let n = rng.random_range(1..12);
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-100.0..100.0)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-100.0..100.0)).collect();
            if x.iter().all(|&v| v == 0.0) || y.iter().all(|&v| v == 0.0) {
                continue;
            }
            let c = cosine_similarity(&x, &y).unwrap();
            assert!((-1.0 - REAL_TOLERANCE..=1.0 + REAL_TOLERANCE).contains(&c));
        }
    }
}
