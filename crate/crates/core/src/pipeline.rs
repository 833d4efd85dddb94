//! End-to-end transmission and training steps:
//! encode → power-normalize → channel → shared decoder → objective.

use alloc::format;
use alloc::vec::Vec;

use crate::channel::{
    legitimate_output, sample_miso_realization, wiretap_adjoint, wiretap_output, ChannelConfig,
    ChannelKind, ChannelRealization,
};
use crate::codec::{build_codec, power_normalize, power_normalize_backward, CodecConfig, Decoder, Encoder};
use crate::objectives::{evaluate, LossReport, ObjectiveConfig};
use crate::optim::{Adam, AdamConfig};
use crate::params::ParamSet;
use crate::rng::{stream, StreamRng};
use crate::tensor::Tensor;
use crate::{Error, Result};

/// Independent random streams for one batch: Bob's noise, Eve's noise and
/// the fading draw. Keeping them apart means skipping Eve's branch never
/// shifts Bob's noise.
#[derive(Debug, Clone)]
pub struct StepStreams {
    pub bob: StreamRng,
    pub eve: StreamRng,
    pub fading: StreamRng,
}

impl StepStreams {
    pub fn new(seed: u64, purpose: &str, index: u64) -> Self {
        StepStreams {
            bob: stream(seed, &format!("{purpose}/bob"), index),
            eve: stream(seed, &format!("{purpose}/eve"), index),
            fading: stream(seed, &format!("{purpose}/fading"), index),
        }
    }

    /// A MISO realization for MISO channels, `None` otherwise.
    pub fn realization(&mut self, channel: &ChannelConfig) -> Result<Option<ChannelRealization>> {
        match channel.kind {
            ChannelKind::MisoMrt => sample_miso_realization(channel.antennas, &mut self.fading).map(Some),
            _ => Ok(None),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Reconstructions {
    pub bob: Tensor,
    pub eve: Option<Tensor>,
}

/// Gradients and diagnostics from one forward/backward pass.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub report: LossReport,
    pub encoder_grads: ParamSet,
    pub decoder_grads: ParamSet,
    /// Decoder forward passes made during this step.
    pub decoder_calls: usize,
    /// Address of the parameter set used by each decoder call, in call order.
    pub decoder_param_sets: Vec<usize>,
}

/// Encoder, shared decoder and per-symbol power budget `p`.
#[derive(Debug, Clone)]
pub struct JscSystem {
    pub encoder: Encoder,
    pub decoder: Decoder,
    pub power: f64,
}

impl JscSystem {
    pub fn new(config: &CodecConfig, init_seed: u64, power: f64) -> Result<Self> {
        let (encoder, decoder) = build_codec(config, init_seed)?;
        Ok(JscSystem {
            encoder,
            decoder,
            power,
        })
    }

    pub fn config(&self) -> &CodecConfig {
        self.encoder.config()
    }

    /// Runs the frozen model: Bob's reconstruction always, Eve's when asked.
    pub fn transmit(
        &self,
        images: &Tensor,
        channel: &ChannelConfig,
        realization: Option<&ChannelRealization>,
        streams: &mut StepStreams,
        with_eve: bool,
    ) -> Result<Reconstructions> {
        let z = self.encoder.encode(images)?;
        let x = power_normalize(&z, self.power)?;
        let y_b = legitimate_output(&x, channel, &mut streams.bob);
        let bob = self.decoder.decode(&y_b)?;
        let eve = if with_eve {
            let y_e = wiretap_output(&x, channel, realization, &mut streams.eve)?;
            Some(self.decoder.decode(&y_e)?)
        } else {
            None
        };
        Ok(Reconstructions { bob, eve })
    }

    /// Loss and parameter gradients for one batch. Eve's branch runs only
    /// when the objective uses it; both branches share one decoder.
    pub fn compute_gradients(
        &self,
        images: &Tensor,
        channel: &ChannelConfig,
        objective: &ObjectiveConfig,
        streams: &mut StepStreams,
    ) -> Result<StepOutput> {
        let calls_before = self.decoder.call_count();
        let mut param_sets = Vec::new();
        let realization = streams.realization(channel)?;

        let (z, enc_tape) = self.encoder.encode_tape(images)?;
        let x = power_normalize(&z, self.power)?;

        let y_b = legitimate_output(&x, channel, &mut streams.bob);
        let (s_b, bob_tape) = self.decoder.decode_tape(&y_b)?;
        param_sets.push(self.decoder.params() as *const ParamSet as usize);

        let eve = if objective.uses_eve() {
            let y_e = wiretap_output(&x, channel, realization.as_ref(), &mut streams.eve)?;
            let (s_e, eve_tape) = self.decoder.decode_tape(&y_e)?;
            param_sets.push(self.decoder.params() as *const ParamSet as usize);
            Some((s_e, eve_tape))
        } else {
            None
        };

        let out = evaluate(objective, images, &s_b, eve.as_ref().map(|(s, _)| s))?;
        if !out.report.total.is_finite() {
            return Err(Error::NonFinite(format!("loss {}", out.report.total)));
        }

        let mut decoder_grads = self.decoder.params().zeros_like();
        let mut grad_x = self.decoder.backward(&bob_tape, &out.grad_bob, &mut decoder_grads);
        if let (Some((_, eve_tape)), Some(grad_eve)) = (&eve, &out.grad_eve) {
            let grad_y_e = self.decoder.backward(eve_tape, grad_eve, &mut decoder_grads);
            let g = wiretap_adjoint(&grad_y_e, channel, realization.as_ref())?;
            grad_x.add_assign(&g);
        }
        let grad_z = power_normalize_backward(&z, &grad_x, self.power);
        let mut encoder_grads = self.encoder.params().zeros_like();
        self.encoder.backward(&enc_tape, &grad_z, &mut encoder_grads);

        Ok(StepOutput {
            report: out.report,
            encoder_grads,
            decoder_grads,
            decoder_calls: self.decoder.call_count() - calls_before,
            decoder_param_sets: param_sets,
        })
    }
}

/// Sequential optimization of a [`JscSystem`] with one Adam state per half.
#[derive(Debug, Clone)]
pub struct Trainer {
    system: JscSystem,
    encoder_opt: Adam,
    decoder_opt: Adam,
    steps: u64,
}

impl Trainer {
    pub fn new(system: JscSystem, adam: AdamConfig) -> Self {
        let encoder_opt = Adam::new(adam, system.encoder.params());
        let decoder_opt = Adam::new(adam, system.decoder.params());
        Trainer {
            system,
            encoder_opt,
            decoder_opt,
            steps: 0,
        }
    }

    pub fn system(&self) -> &JscSystem {
        &self.system
    }

    pub fn into_system(self) -> JscSystem {
        self.system
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// One optimizer step. Noise for step `k` comes from
    /// `channel.noise_seed` and `k`, so runs replay exactly.
    pub fn train_step(
        &mut self,
        images: &Tensor,
        channel: &ChannelConfig,
        objective: &ObjectiveConfig,
    ) -> Result<StepOutput> {
        let mut streams = StepStreams::new(channel.noise_seed, "train", self.steps);
        let out = self
            .system
            .compute_gradients(images, channel, objective, &mut streams)?;
        self.encoder_opt
            .step(self.system.encoder.params_mut(), &out.encoder_grads)?;
        self.decoder_opt
            .step(self.system.decoder.params_mut(), &out.decoder_grads)?;
        if !self.system.encoder.params().is_finite() || !self.system.decoder.params().is_finite() {
            return Err(Error::NonFinite("parameters after update".into()));
        }
        self.steps += 1;
        Ok(out)
    }
}
