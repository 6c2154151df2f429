use super::tensor::{Tensor3, TensorBatch};
use crate::error::{Error, Result};

/// Winning input offset (within its item) for every pooled output cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PoolIndices {
    pub input_height: usize,
    pub input_width: usize,
    pub argmax: Vec<u32>,
}

/// 2×2 max-pooling with stride 2. Ties resolve to the first cell in
/// row-major window order.
pub fn maxpool2_forward(input: &TensorBatch) -> Result<(TensorBatch, PoolIndices)> {
    let (h, w, c) = (input.height, input.width, input.channels);
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::config(format!(
            "max-pool needs even dimensions, got {h}x{w}"
        )));
    }
    let (oh, ow) = (h / 2, w / 2);
    let mut out = TensorBatch::zeros(input.n, oh, ow, c);
    let mut argmax = vec![0u32; input.n * oh * ow * c];
    let out_len = oh * ow * c;
    for (i, item) in input.data.chunks_exact(h * w * c).enumerate() {
        let dst = &mut out.data[i * out_len..(i + 1) * out_len];
        let idx = &mut argmax[i * out_len..(i + 1) * out_len];
        for y in 0..oh {
            for x in 0..ow {
                for ch in 0..c {
                    let mut best = (2 * y * w + 2 * x) * c + ch;
                    for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                        let cand = ((2 * y + dy) * w + 2 * x + dx) * c + ch;
                        if item[cand] > item[best] {
                            best = cand;
                        }
                    }
                    let o = (y * ow + x) * c + ch;
                    dst[o] = item[best];
                    idx[o] = best as u32;
                }
            }
        }
    }
    Ok((
        out,
        PoolIndices {
            input_height: h,
            input_width: w,
            argmax,
        },
    ))
}

/// Routes each upstream gradient to the input cell that won its window.
pub fn maxpool2_backward(upstream: &TensorBatch, indices: &PoolIndices) -> TensorBatch {
    let c = upstream.channels;
    let mut dx = TensorBatch::zeros(upstream.n, indices.input_height, indices.input_width, c);
    let in_len = dx.item_len();
    let out_len = upstream.item_len();
    for i in 0..upstream.n {
        let dst = &mut dx.data[i * in_len..(i + 1) * in_len];
        for (o, &g) in upstream.item(i).iter().enumerate() {
            dst[indices.argmax[i * out_len + o] as usize] += g;
        }
    }
    dx
}

/// Single-map 2×2 max-pooling.
pub fn maxpool2(input: &Tensor3) -> Result<Tensor3> {
    maxpool2_forward(&TensorBatch::from(input))?.0.into_single()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_of_four() {
        let t = Tensor3::new(2, 2, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(maxpool2(&t).unwrap().data, vec![4.0]);
    }

    #[test]
    fn constant_stays_constant() {
        let t = Tensor3::filled(4, 6, 3, 2.5);
        let out = maxpool2(&t).unwrap();
        assert_eq!((out.height, out.width, out.channels), (2, 3, 3));
        assert!(out.data.iter().all(|&v| v == 2.5));
    }

    #[test]
    fn window_maxima_match_brute_force_scan() {
        let data: Vec<f64> = (0..16).map(|i| ((i * 37) % 16) as f64).collect();
        let t = Tensor3::new(4, 4, 1, data).unwrap();
        let out = maxpool2(&t).unwrap();
        let mut want = Vec::new();
        for wy in 0..2 {
            for wx in 0..2 {
                let mut m = f64::MIN;
                for y in 2 * wy..2 * wy + 2 {
                    for x in 2 * wx..2 * wx + 2 {
                        m = m.max(t.at(y, x, 0));
                    }
                }
                want.push(m);
            }
        }
        assert_eq!(out.data, want);
    }

    #[test]
    fn odd_dimension_is_rejected() {
        assert!(maxpool2(&Tensor3::zeros(3, 4, 1)).is_err());
    }

    #[test]
    fn backward_routes_to_winner() {
        let t = TensorBatch::new(1, 2, 2, 1, vec![1.0, 5.0, 3.0, 4.0]).unwrap();
        let (_, idx) = maxpool2_forward(&t).unwrap();
        let up = TensorBatch::new(1, 1, 1, 1, vec![2.0]).unwrap();
        assert_eq!(maxpool2_backward(&up, &idx).data, vec![0.0, 2.0, 0.0, 0.0]);
    }
}
