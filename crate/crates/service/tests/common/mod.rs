#![allow(dead_code)]

use std::sync::{Arc, OnceLock};

use tapfuse::decoder::DecoderModels;
use tapfuse::keyboard::default_layout;
use tapfuse_service::{bundled_models, ClientMessage};

pub fn models() -> Arc<DecoderModels> {
    static MODELS: OnceLock<Arc<DecoderModels>> = OnceLock::new();
    MODELS
        .get_or_init(|| Arc::new(bundled_models(&default_layout()).unwrap()))
        .clone()
}

pub fn keys(script: &str) -> Vec<ClientMessage> {
    script
        .chars()
        .enumerate()
        .map(|(i, c)| ClientMessage {
            v: Some(1),
            keydown: match c {
                ' ' => "space".into(),
                '<' => "backspace".into(),
                '|' => "commit_literal".into(),
                c => c.to_string(),
            },
            client_time: 250.0 * i as f64,
        })
        .collect()
}
