import pytest
import torch
from transformers import GPT2Config, GPT2LMHeadModel


@pytest.fixture(scope="session")
def tiny_model():
    """Random-weight 2-layer, 2-head causal LM; no downloads needed."""
    torch.manual_seed(0)
    cfg = GPT2Config(
        vocab_size=64,
        n_positions=32,
        n_embd=32,
        n_layer=2,
        n_head=2,
        attn_implementation="eager",
    )
    model = GPT2LMHeadModel(cfg)
    model.eval()
    return model

