//! Trains the GRU/attention model on a synthetic cohort and compares it
//! with the SOFA baselines on held-out stays.
//!
//! cargo run --release --example synthetic_benchmark -- [n_train] [n_test] [seed]

use std::time::Instant;

use icu_acuity::eval::{compare_mean_auc, hourly_curve, mean_auc, roc_auc, Alignment, HourlyPredictions};
use icu_acuity::ingest::CohortCriteria;
use icu_acuity::model::{train, split_validation, ModelConfig};
use icu_acuity::sofa::traditional_scores;
use icu_acuity::synth::{generate, SynthConfig};
use icu_acuity::VariableSpecs;

fn main() -> icu_acuity::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).map(|a| a.parse().expect("integer argument")).collect();
    let n_train = *args.first().unwrap_or(&2000) as usize;
    let n_test = *args.get(1).unwrap_or(&500) as usize;
    let seed = *args.get(2).unwrap_or(&1);
    let start = Instant::now();

    let cohort = generate(&SynthConfig {
        n_encounters: n_train + n_test,
        seed,
        ..Default::default()
    })?;
    let series = cohort.preprocess(&VariableSpecs::default(), &CohortCriteria::default()).cohort;
    let (train_set, test_set) = series.split_at(n_train.min(series.len()));
    let hours: usize = series.iter().map(|s| s.hours()).sum();
    let deaths = series.iter().filter(|s| s.label).count();
    println!("{} stays, {hours} hours, {deaths} deaths", series.len());
    let truth: Vec<f64> = cohort.truth[n_train..].iter().map(|t| t.risk).collect();
    let test_labels: Vec<bool> = test_set.iter().map(|s| s.label).collect();
    println!("oracle test AUC {:.4}", roc_auc(&truth, &test_labels)?);

    let config = ModelConfig { seed, ..Default::default() };
    let (fit, val) = split_validation(train_set, config.validation_fraction, seed);
    let (model, log) = train(&fit, &val, &config)?;
    for e in &log.epochs {
        println!("epoch {:>2} loss {:.4} val {:.4}", e.epoch, e.train_loss, e.val_auc);
    }
    println!("trained in {:.1?}", start.elapsed());

    let ids: Vec<String> = test_set.iter().map(|s| s.encounter_id.clone()).collect();
    let probs = test_set
        .iter()
        .map(|s| Ok(model.predict(s)?.probs))
        .collect::<icu_acuity::Result<Vec<_>>>()?;
    let gru = HourlyPredictions::new(ids.clone(), probs, test_labels.clone())?;
    let trad = HourlyPredictions::new(ids, test_set.iter().map(traditional_scores).collect(), test_labels.clone())?;
    println!("final-hour AUC gru {:.4} traditional {:.4}", roc_auc(&gru.last(), &test_labels)?, roc_auc(&trad.last(), &test_labels)?);
    for align in [Alignment::FromAdmission, Alignment::ToDischarge] {
        let a = mean_auc(&hourly_curve(&gru, align, 100, 0, seed)?);
        let b = mean_auc(&hourly_curve(&trad, align, 100, 0, seed)?);
        let cmp = compare_mean_auc(&gru, &trad, align, 100, 100, seed)?;
        println!(
            "{}: mean AUC gru {a:.4} traditional {b:.4} diff {:.4} [{:.4}, {:.4}] p {}",
            align.name(),
            cmp.difference,
            cmp.ci_lo,
            cmp.ci_hi,
            cmp.p_value
        );
    }
    println!("total {:.1?}", start.elapsed());
    Ok(())
}
