//! Interactive typing session: per-character literal text, a word
//! suggestion from beam search, and the commit/backspace vocabulary.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    beam_decode_with_context, greedy_decode_with_context, DecoderConfig, DecoderModels,
    TouchObservation,
};
use crate::error::Result;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionState {
    pub committed: String,
    /// Greedy per-character output for the current word.
    pub literal: String,
    /// Best beam-search word for the current word.
    pub suggestion: String,
    pub autocorrect_disabled: bool,
}

/// Single-owner decoding state over shared immutable models.
#[derive(Debug, Clone)]
pub struct DecoderSession {
    models: Arc<DecoderModels>,
    cfg: DecoderConfig,
    state: SessionState,
    word_obs: Vec<TouchObservation>,
}

impl DecoderSession {
    pub fn new(models: Arc<DecoderModels>, cfg: DecoderConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(DecoderSession {
            models,
            cfg,
            state: SessionState::default(),
            word_obs: Vec::new(),
        })
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.cfg
    }

    pub fn models(&self) -> &Arc<DecoderModels> {
        &self.models
    }

    /// Observations of the word in progress.
    pub fn word_observations(&self) -> &[TouchObservation] {
        &self.word_obs
    }

    pub fn feed(&mut self, obs: TouchObservation) -> Result<&SessionState> {
        let prefix = format!("{}{}", self.state.committed, self.state.literal);
        let ch = greedy_decode_with_context(
            std::slice::from_ref(&obs),
            &self.models,
            &self.cfg,
            &prefix,
            false,
        )?;
        self.word_obs.push(obs);
        self.state.literal.push_str(&ch);
        self.refresh()?;
        Ok(&self.state)
    }

    fn refresh(&mut self) -> Result<()> {
        self.state.suggestion = if self.word_obs.is_empty() {
            String::new()
        } else {
            beam_decode_with_context(
                &self.word_obs,
                &self.models,
                &self.cfg,
                &self.state.committed,
                false,
            )?
            .into_iter()
            .next()
            .map(|r| r.text)
            .unwrap_or_else(|| self.state.literal.clone())
        };
        Ok(())
    }

    /// Enters the suggestion (or the literal when autocorrect is off or
    /// there is no suggestion) followed by a space.
    pub fn commit_space(&mut self) -> &SessionState {
        let word = if self.state.autocorrect_disabled || self.state.suggestion.is_empty() {
            std::mem::take(&mut self.state.literal)
        } else {
            std::mem::take(&mut self.state.suggestion)
        };
        self.finish_word(&word);
        &self.state
    }

    /// Enters the literal per-character text followed by a space.
    pub fn commit_literal(&mut self) -> &SessionState {
        let word = std::mem::take(&mut self.state.literal);
        self.finish_word(&word);
        &self.state
    }

    fn finish_word(&mut self, word: &str) {
        self.state.committed.push_str(word);
        self.state.committed.push(' ');
        self.state.literal.clear();
        self.state.suggestion.clear();
        self.state.autocorrect_disabled = false;
        self.word_obs.clear();
    }

    /// Deletes the last literal character and turns autocorrect off for the
    /// current word. No-op on an empty word.
    pub fn backspace(&mut self) -> Result<&SessionState> {
        if self.state.literal.pop().is_some() {
            self.word_obs.pop();
            self.state.autocorrect_disabled = true;
            self.refresh()?;
        }
        Ok(&self.state)
    }
}
