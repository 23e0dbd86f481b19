//! Classical fixed-step fourth-order Runge-Kutta.

use crate::scalar::Scalar;

/// Scratch buffers reused across steps.
#[derive(Debug, Clone)]
pub struct Rk4Workspace<T> {
    k1: Vec<T>,
    k2: Vec<T>,
    k3: Vec<T>,
    k4: Vec<T>,
    stage: Vec<T>,
}

impl<T: Scalar> Rk4Workspace<T> {
    pub fn new(dim: usize) -> Self {
        Rk4Workspace {
            k1: vec![T::zero(); dim],
            k2: vec![T::zero(); dim],
            k3: vec![T::zero(); dim],
            k4: vec![T::zero(); dim],
            stage: vec![T::zero(); dim],
        }
    }
}

/// Advances the autonomous system `dy/dt = f(y)` by one step of size `h`.
/// `f(y, out)` writes the derivative at `y` into `out`.
pub fn rk4_step<T, F>(f: &mut F, y: &mut [T], h: T, ws: &mut Rk4Workspace<T>)
where
    T: Scalar,
    F: FnMut(&[T], &mut [T]),
{
    let half = T::lit(0.5) * h;
    let sixth = h / T::lit(6.0);
    let two = T::lit(2.0);

    f(y, &mut ws.k1);
    for i in 0..y.len() {
        ws.stage[i] = y[i] + half * ws.k1[i];
    }
    f(&ws.stage, &mut ws.k2);
    for i in 0..y.len() {
        ws.stage[i] = y[i] + half * ws.k2[i];
    }
    f(&ws.stage, &mut ws.k3);
    for i in 0..y.len() {
        ws.stage[i] = y[i] + h * ws.k3[i];
    }
    f(&ws.stage, &mut ws.k4);
    for i in 0..y.len() {
        y[i] += sixth * (ws.k1[i] + two * (ws.k2[i] + ws.k3[i]) + ws.k4[i]);
    }
}
