/// Atom and weight error bounds implied by a `W_1` bound of `eps` around a
/// truth with minimum weight `delta` and atom separation `zeta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma1Bounds {
    /// `eps / delta`
    pub atom_bound: f64,
    /// `eps / (zeta - eps / delta)`; `None` outside the valid regime.
    pub weight_bound: Option<f64>,
    /// `eps < zeta * delta`
    pub valid: bool,
}

pub fn lemma1_bounds(eps: f64, delta: f64, zeta: f64) -> Lemma1Bounds {
    let atom_bound = eps / delta;
    let valid = eps > 0.0 && delta > 0.0 && delta < 1.0 && zeta > 0.0 && eps < zeta * delta;
    let weight_bound = valid.then(|| eps / (zeta - atom_bound));
    Lemma1Bounds { atom_bound, weight_bound, valid }
}
