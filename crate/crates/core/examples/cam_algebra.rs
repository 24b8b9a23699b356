//! Numerical tour of the three map definitions and how they relate.

use ensemble_cam::cam::{
    grad_cam, grad_cam_linear, grad_cam_pp, grad_cam_weights, hires_cam, top_fraction_mask, upsample_bilinear,
    normalize_unit, average_cams, ENSEMBLE_FRACTION,
};
use ensemble_cam::model::TARGET_SHAPE;
use ensemble_cam::{Rng, Shape, SmallCnn, Tensor};

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn main() -> ensemble_cam::Result<()> {
    let mut rng = Rng::new(11);

    // With GAP straight after the target layer, every gradient plane is
    // constant and Grad-CAM weights are the head weights over h·w.
    let model = SmallCnn::init(&mut rng);
    let image = Tensor::uniform(Shape::new(1, 3, 64, 64), 0.0, 1.0, &mut rng);
    let trace = model.forward(&image)?;
    let class = trace.predicted_class.index();
    let g = model.class_gradients(&trace, class)?;
    let w = grad_cam_weights(trace.target_activation(), &g)?;
    let head: Vec<f64> = (0..32).map(|k| model.fc.weight.get(class, k, 0, 0) / 256.0).collect();
    println!("Grad-CAM weights vs head/256: max gap {:.1e}", max_gap(w.as_slice(), &head));

    // Spatially uniform gradients: HiResCAM is Grad-CAM without the ReLU.
    let a = Tensor::uniform(TARGET_SHAPE, 0.0, 2.0, &mut rng);
    let per_channel: Vec<f64> = (0..32).map(|_| rng.range(-1.0, 1.0)).collect();
    let uniform_g = Tensor::from_fn(TARGET_SHAPE, |_, k, _, _| per_channel[k])?;
    let hi = hires_cam(&a, &uniform_g)?;
    let lin = grad_cam_linear(&a, &uniform_g)?;
    println!("HiResCAM vs pre-ReLU Grad-CAM: max gap {:.1e}", max_gap(hi.values(), lin.values()));

    // Scaling G by a positive factor scales Grad-CAM by the same factor.
    let g = Tensor::randn(TARGET_SHAPE, 1.0, &mut rng);
    let base = grad_cam(&a, &g)?;
    let scaled = grad_cam(&a, &g.scale(3.5)?)?;
    let expect: Vec<f64> = base.values().iter().map(|v| v * 3.5).collect();
    println!("Grad-CAM(3.5·G) vs 3.5·Grad-CAM(G): max gap {:.1e}", max_gap(scaled.values(), &expect));

    // Zero gradients hit the α guard and give an all-zero Grad-CAM++ map.
    let pp = grad_cam_pp(&a, &Tensor::zeros(TARGET_SHAPE))?;
    println!("Grad-CAM++ with G = 0: {} non-zero pixels", pp.nonzero_count());

    // Ensemble: upsample, unit-normalize, average, keep the top 10%.
    let prep = |c| upsample_bilinear(&c, 64, 64).map(|u| normalize_unit(&u));
    let avg = average_cams(&prep(grad_cam(&a, &g)?)?, &prep(hires_cam(&a, &g)?)?, &prep(grad_cam_pp(&a, &g)?)?)?;
    let mask = top_fraction_mask(&avg, ENSEMBLE_FRACTION)?;
    println!("ensemble keeps {} of {} pixels", mask.retained_count(), mask.len());
    Ok(())
}
