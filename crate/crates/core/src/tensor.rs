//! Physical-space symmetric tensors in the order `(11, 22, 33, 12, 13, 23)`.

pub(crate) type Phys = [Vec<f64>; 3];
pub(crate) type SymTensor = [Vec<f64>; 6];

pub(crate) fn zero_phys(len: usize) -> Phys {
    [vec![0.0; len], vec![0.0; len], vec![0.0; len]]
}

pub(crate) fn zero_tensor(len: usize) -> SymTensor {
    std::array::from_fn(|_| vec![0.0; len])
}

/// `T_jl += w (a_j b_l + a_l b_j)`
pub(crate) fn add_sym(t: &mut SymTensor, a: &Phys, b: &Phys, w: f64) {
    const PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];
    for (c, &(j, l)) in PAIRS.iter().enumerate() {
        let (aj, al, bj, bl) = (&a[j], &a[l], &b[j], &b[l]);
        for (x, i) in t[c].iter_mut().zip(0..) {
            *x += w * (aj[i] * bl[i] + al[i] * bj[i]);
        }
    }
}

pub(crate) fn axpy_phys(out: &mut Phys, w: f64, a: &Phys) {
    for j in 0..3 {
        for (x, y) in out[j].iter_mut().zip(&a[j]) {
            *x += w * y;
        }
    }
}
