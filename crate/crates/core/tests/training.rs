use gafed::gaf::{EncodeConfig, Encoder, GafImage};
use gafed::ingest::{synth_dataset, SynthOptions};
use gafed::nn::{
    adam_step, batch_loss_grad, decode_checkpoint, encode_checkpoint, forward, init_params, AdamConfig, AdamState, ModelSpec,
};

fn batch(n_per_class: usize) -> Vec<GafImage> {
    let m = synth_dataset(5, &SynthOptions { per_class: n_per_class, seed: 21, ..Default::default() }).unwrap();
    Encoder::new(EncodeConfig::default()).unwrap().encode_all(&m.beats).unwrap()
}

#[test]
fn fifty_steps_halve_the_loss_on_a_fixed_batch() {
    let spec = ModelSpec::default();
    let images = batch(7)[..32].to_vec();
    let refs: Vec<&GafImage> = images.iter().collect();
    let mut params = init_params(&spec, 2).unwrap();
    let mut state = AdamState::new(AdamConfig::default(), &params);
    let initial = batch_loss_grad(&params, &spec, &refs).unwrap().loss_sum / 32.0;
    for _ in 0..50 {
        let g = batch_loss_grad(&params, &spec, &refs).unwrap();
        adam_step(&mut params, &g.grads, &mut state).unwrap();
    }
    let last = batch_loss_grad(&params, &spec, &refs).unwrap().loss_sum / 32.0;
    assert!(last <= 0.5 * initial, "loss {initial} -> {last}");
}

#[test]
fn checkpoint_preserves_predictions() {
    let spec = ModelSpec { c1: 4, c2: 6, c3: 6, c4: 4, fc: 16, classes: 5, alpha: 0.05 };
    let params = init_params(&spec, 8).unwrap();
    let bytes = encode_checkpoint(&spec, &params).unwrap();
    let (spec2, params2) = decode_checkpoint(&bytes).unwrap();
    assert_eq!(spec2, spec);
    let images = batch(2);
    assert_eq!(forward(&params, &spec, &images).unwrap(), forward(&params2, &spec2, &images).unwrap());
}
