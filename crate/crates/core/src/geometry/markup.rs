//! 68-point face markup topology (jaw, brows, nose, eyes, mouth), 0-based.

use std::ops::Range;

pub const N68: usize = 68;

pub const JAW: Range<usize> = 0..17;
pub const RIGHT_BROW: Range<usize> = 17..22;
pub const LEFT_BROW: Range<usize> = 22..27;
pub const NOSE_BRIDGE: Range<usize> = 27..31;
pub const NOSE_BASE: Range<usize> = 31..36;
pub const RIGHT_EYE: Range<usize> = 36..42;
pub const LEFT_EYE: Range<usize> = 42..48;
pub const OUTER_MOUTH: Range<usize> = 48..60;
pub const INNER_MOUTH: Range<usize> = 60..68;

/// Index each landmark maps to under a horizontal mirror.
pub fn flip_permutation68() -> [usize; N68] {
    let mut perm = [0usize; N68];
    let mut pair = |a: usize, b: usize| {
        perm[a] = b;
        perm[b] = a;
    };
    for i in 0..=8 {
        pair(i, 16 - i);
    }
    for i in 0..5 {
        pair(17 + i, 26 - i);
    }
    for i in 27..31 {
        pair(i, i);
    }
    pair(31, 35);
    pair(32, 34);
    pair(33, 33);
    for (a, b) in [(36, 45), (37, 44), (38, 43), (39, 42), (40, 47), (41, 46)] {
        pair(a, b);
    }
    for (a, b) in [(48, 54), (49, 53), (50, 52), (51, 51), (55, 59), (56, 58), (57, 57)] {
        pair(a, b);
    }
    for (a, b) in [(60, 64), (61, 63), (62, 62), (65, 67), (66, 66)] {
        pair(a, b);
    }
    perm
}

/// Every landmark gets a patch.
pub fn patches68() -> Vec<usize> {
    (0..N68).collect()
}

/// Every second landmark of each contour group.
pub const PATCHES34: [usize; 34] = [
    0, 2, 4, 6, 8, 10, 12, 14, 16, // jaw
    17, 19, 21, 22, 24, 26, // brows
    27, 29, 31, 33, 35, // nose
    36, 38, 40, 42, 44, 46, // eyes
    48, 50, 52, 54, 56, 58, // outer mouth
    62, 66, // inner mouth
];

/// Jaw corners and chin, brow endpoints, nose bridge/tip/base, eye corners,
/// mouth extremes.
pub const PATCHES19: [usize; 19] = [
    0, 4, 8, 12, 16, // jaw
    17, 21, 22, 26, // brows
    27, 30, // nose bridge top, tip
    36, 39, 42, 45, // eye corners
    48, 51, 54, 57, // mouth extremes
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flip_is_an_involution() {
        let p = flip_permutation68();
        for i in 0..N68 {
            assert_eq!(p[p[i]], i);
        }
    }

    #[test]
    fn subsets_are_sorted_and_distinct() {
        for s in [&PATCHES34[..], &PATCHES19[..]] {
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            assert!(s.iter().all(|&i| i < N68));
        }
    }
}
