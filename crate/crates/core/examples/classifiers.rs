//! Fits all four classifiers on two Gaussian clouds and scores a held-out set.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use voxprosody::classifiers::{fit, ClassifierConfig, ClassifierKind};
use voxprosody::features::{Label, LabeledDataset};

fn clouds(n: usize, seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let (mut rows, mut labels) = (Vec::new(), Vec::new());
    for i in 0..n {
        let (label, c) = if i % 2 == 0 {
            (Label::Asd, 1.2)
        } else {
            (Label::Td, -1.2)
        };
        rows.push(vec![
            c + noise.sample(&mut rng),
            c + noise.sample(&mut rng),
            noise.sample(&mut rng),
        ]);
        labels.push(label);
    }
    let names = vec!["a".into(), "b".into(), "noise".into()];
    LabeledDataset::new(
        names,
        rows,
        labels,
        (0..n).map(|i| format!("s{i}")).collect(),
    )
    .unwrap()
}

fn main() -> voxprosody::Result<()> {
    let train = clouds(120, 1);
    let test = clouds(200, 2);
    for kind in ClassifierKind::ALL {
        let model = fit(kind, &train, &ClassifierConfig::default(), 7)?;
        let preds = model.predict_dataset(&test)?;
        let correct = preds
            .iter()
            .zip(&test.labels)
            .filter(|(p, l)| p.label == **l)
            .count();
        println!(
            "{:<24} held-out accuracy {:.3}  first score {:.3}",
            kind.display_name(),
            correct as f64 / test.len() as f64,
            preds[0].score
        );
    }
    Ok(())
}
