"""Text encoder: recurrent dynamics, attention pooling, gradient flow."""

import numpy as np
import pytest
import torch
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from misinfo.model.encoder import TextEncoder, attention_pool

from gradcheck import (
    autograd_gradients,
    finite_difference_gradients,
    relative_errors,
)


def tied_encoder(embed_dim=4, hidden=3, seed=0, dtype=torch.float64) -> TextEncoder:
    """Encoder whose backward-direction weights equal the forward ones."""
    torch.manual_seed(seed)
    enc = TextEncoder(embed_dim, hidden)
    if dtype == torch.float64:
        enc.double()
    with torch.no_grad():
        for name in ("weight_ih_l0", "weight_hh_l0", "bias_ih_l0", "bias_hh_l0"):
            getattr(enc.lstm, f"{name}_reverse").copy_(getattr(enc.lstm, name))
    return enc


class TestRecurrentDynamics:
    def test_zero_weights_zero_input_gives_zero_states(self):
        enc = TextEncoder(4, 3)
        with torch.no_grad():
            for p in enc.parameters():
                p.zero_()
        embedded = torch.zeros(2, 5, 4)
        hidden, final = enc(embedded, torch.tensor([5, 3]))
        assert torch.all(hidden == 0)
        assert torch.all(final == 0)

    def test_single_step_final_equals_hidden(self):
        torch.manual_seed(1)
        enc = TextEncoder(4, 3)
        embedded = torch.randn(1, 1, 4)
        hidden, final = enc(embedded, torch.tensor([1]))
        assert hidden.shape == (1, 1, 6)
        assert torch.equal(hidden[0, 0], final[0])

    def test_empty_sequence_fatal(self):
        enc = TextEncoder(4, 3)
        with pytest.raises(ValueError):
            enc(torch.zeros(1, 0, 4), torch.tensor([0]))

    def test_over_long_sequence_fatal(self):
        enc = TextEncoder(4, 3)
        with pytest.raises(ValueError):
            enc(torch.zeros(1, 129, 4), torch.tensor([129]))

    def test_reversal_swaps_final_state_roles(self):
        enc = tied_encoder()
        torch.manual_seed(2)
        embedded = torch.randn(1, 6, 4, dtype=torch.float64)
        _, final_fwd = enc(embedded, torch.tensor([6]))
        _, final_rev = enc(torch.flip(embedded, dims=[1]), torch.tensor([6]))
        hidden_size = enc.hidden_size
        f_f, f_b = final_fwd[0, :hidden_size], final_fwd[0, hidden_size:]
        r_f, r_b = final_rev[0, :hidden_size], final_rev[0, hidden_size:]
        assert torch.equal(r_f, f_b)
        assert torch.equal(r_b, f_f)

    def test_padding_does_not_change_encoding(self):
        torch.manual_seed(3)
        enc = TextEncoder(4, 3)
        short = torch.randn(1, 3, 4)
        padded = torch.cat([short, torch.zeros(1, 2, 4)], dim=1)
        h_short, f_short = enc(short, torch.tensor([3]))
        h_padded, f_padded = enc(padded, torch.tensor([3]))
        assert torch.allclose(f_short, f_padded)
        assert torch.allclose(h_short, h_padded[:, :3])
        assert torch.all(h_padded[:, 3:] == 0)


class TestAttentionPool:
    def test_single_step_weight_is_one(self):
        hidden = torch.randn(1, 1, 6)
        final = torch.randn(1, 6)
        pooled, weights = attention_pool(hidden, final)
        assert weights[0, 0] == pytest.approx(1.0)
        assert torch.allclose(pooled[0], hidden[0, 0])

    def test_identical_rows_give_uniform_weights(self):
        row = torch.randn(6)
        hidden = row.expand(1, 5, 6).clone()
        final = torch.randn(1, 6)
        _, weights = attention_pool(hidden, final)
        assert torch.allclose(weights, torch.full((1, 5), 0.2))

    def test_hand_two_by_two_case(self):
        # h = ((1,0),(0,1)), f = (1,0); scores = (1, 0)
        # alpha = softmax(1, 0) = (e/(e+1), 1/(e+1))
        # pooled = alpha_1*(1,0) + alpha_2*(0,1) = (alpha_1, alpha_2)
        hidden = torch.tensor([[[1.0, 0.0], [0.0, 1.0]]])
        final = torch.tensor([[1.0, 0.0]])
        pooled, weights = attention_pool(hidden, final)
        e = float(np.exp(1.0))
        a1, a2 = e / (e + 1.0), 1.0 / (e + 1.0)
        assert weights[0].tolist() == pytest.approx([a1, a2])
        assert pooled[0].tolist() == pytest.approx([a1, a2])

    def test_mask_excludes_padded_steps(self):
        torch.manual_seed(4)
        hidden = torch.randn(1, 4, 6)
        final = torch.randn(1, 6)
        mask = torch.tensor([[True, True, False, False]])
        _, weights = attention_pool(hidden, final, mask)
        assert torch.all(weights[0, 2:] == 0)
        assert float(weights.sum()) == pytest.approx(1.0)

    @given(st.integers(0, 10_000))
    @settings(max_examples=25, deadline=None)
    def test_weights_form_simplex(self, seed):
        g = torch.Generator().manual_seed(seed)
        n = int(torch.randint(1, 8, (1,), generator=g))
        hidden = torch.randn(2, n, 6, generator=g)
        final = torch.randn(2, 6, generator=g)
        _, weights = attention_pool(hidden, final)
        assert torch.all(weights >= 0)
        assert torch.allclose(weights.sum(dim=1), torch.ones(2), atol=1e-6)

    def test_pooled_vector_in_convex_hull(self):
        # Membership solved directly: find beta >= 0, sum(beta) = 1 with
        # hidden^T beta = pooled, via linear programming feasibility.
        torch.manual_seed(5)
        hidden = torch.randn(1, 4, 6, dtype=torch.float64)
        final = torch.randn(1, 6, dtype=torch.float64)
        pooled, _ = attention_pool(hidden, final)
        h = hidden[0].numpy()
        target = pooled[0].numpy()
        a_eq = np.vstack([h.T, np.ones((1, 4))])
        b_eq = np.concatenate([target, [1.0]])
        res = linprog(c=np.zeros(4), A_eq=a_eq, b_eq=b_eq, bounds=[(0, 1)] * 4,
                      method="highs")
        assert res.success


class TestEncoderGradients:
    def test_encoder_gradient_matches_finite_differences(self):
        torch.manual_seed(6)
        enc = TextEncoder(4, 3).double()
        enc.eval()
        embedded = torch.randn(2, 4, 4, dtype=torch.float64)
        lengths = torch.tensor([4, 4])

        def loss_fn():
            hidden, final = enc(embedded, lengths)
            pooled, _ = attention_pool(hidden, final)
            return (pooled ** 2).sum() + final.sum()

        params = dict(enc.named_parameters())
        errors = relative_errors(
            autograd_gradients(loss_fn, params),
            finite_difference_gradients(loss_fn, params, h=1e-5),
        )
        assert max(errors.values()) < 1e-6, errors
