import time
from collections import OrderedDict

import torch

from sanity import SEED
from veilface.generator.networks import Generator
from veilface.generator.types import GeneratorConfig
from veilface.meta_attack.attack import meta_adversarial_loss
from veilface.meta_attack.types import MetaStepConfig
from veilface.perturbation.fusion import SemanticProtector, init_perturbation_encoder
from veilface.perturbation.types import FusionConfig
from veilface.surrogate.embedder import ToyEmbedder
from veilface.surrogate.model import SurrogateEnsemble, SurrogateModel
from veilface.surrogate.types import EmbedderConfig

IMAGE_SIZE = 16
N_ATTRIBUTES = 2


def build():
    torch.manual_seed(SEED)
    config = GeneratorConfig(
        image_size=IMAGE_SIZE,
        n_attributes=N_ATTRIBUTES,
        enc_channels=[2, 2, 2, 2],
        kernel_size=2,
        shortcut_layers=1,
        enc_activation="elu",
        dec_activation="elu",
        dis_channels=[2, 2],
    )
    generator = Generator(config).double().requires_grad_(False)
    perturb_encoder = init_perturbation_encoder(generator)
    with torch.no_grad():
        for p in perturb_encoder.parameters():
            p.add_(0.1 * torch.randn_like(p))
    models = []
    for i, activation in enumerate(("elu", "tanh")):
        network = ToyEmbedder(
            EmbedderConfig(
                image_size=IMAGE_SIZE,
                channels=[4, 4],
                embedding_dim=8,
                activation=activation,
            )
        ).double()
        models.append(
            SurrogateModel(f"toy-{i}", network, IMAGE_SIZE).freeze()
        )
    protector = SemanticProtector(
        generator, perturb_encoder, FusionConfig(beta=0.5, gamma=0.3)
    )
    return protector, SurrogateEnsemble(models)


def run():
    start = time.time()
    protector, ensemble = build()
    n_params = sum(p.numel() for p in protector.perturb_encoder.parameters())
    print(f"E_adv has {n_params} parameters")

    x_cov = torch.rand(2, 3, IMAGE_SIZE, IMAGE_SIZE, dtype=torch.float64) * 2 - 1
    x_target = torch.rand(1, 3, IMAGE_SIZE, IMAGE_SIZE, dtype=torch.float64) * 2 - 1
    att_b = torch.tensor([[1.0, 0.0], [0.0, 1.0]], dtype=torch.float64)
    cfg = MetaStepConfig(inner_lr=0.5, epsilon=0.0, second_order=True)
    names = [name for name, _ in protector.perturb_encoder.named_parameters()]

    def loss_fn(*flat: torch.Tensor) -> torch.Tensor:
        params = OrderedDict(zip(names, flat))
        return meta_adversarial_loss(
            ensemble, protector, x_cov, att_b, x_target, cfg, params=params
        ).loss

    inputs = tuple(
        p.detach().clone().requires_grad_(True)
        for p in protector.perturb_encoder.parameters()
    )
    ok = torch.autograd.gradcheck(loss_fn, inputs, eps=1e-6, atol=1e-7, rtol=1e-3)
    print(f"second-order meta gradient matches finite differences: {ok}")
    print(f"finished in {time.time() - start:.1f}s")


if __name__ == "__main__":
    run()
