use crate::tensor::Parameters;

/// Largest elementwise relative error between the analytic gradient returned
/// by `loss_and_grad` and central finite differences of its loss, using
/// `|a − n| / max(|a|, |n|, 1e-8)`.
pub fn grad_check<P, F>(params: &P, loss_and_grad: F, step: f64) -> f64
where
    P: Parameters + Clone,
    F: Fn(&P) -> (f64, P),
{
    let (_, analytic) = loss_and_grad(params);
    let analytic = analytic.to_flat();
    let base = params.to_flat();
    let mut probe = params.clone();
    let mut worst: f64 = 0.0;
    for i in 0..base.len() {
        let mut flat = base.clone();
        flat[i] = base[i] + step;
        probe.set_flat(&flat).expect("same layout");
        let up = loss_and_grad(&probe).0;
        flat[i] = base[i] - step;
        probe.set_flat(&flat).expect("same layout");
        let down = loss_and_grad(&probe).0;
        let numeric = (up - down) / (2.0 * step);
        let a = analytic[i];
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max(err);
    }
    worst
}
