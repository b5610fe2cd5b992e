import sparta.eog
import sparta.eog.cli
import sparta.eog.evaluation.sweep
import sparta.eog.training.trainer


# If there are no other tests this one is needed -> otherwise pytest will fail
def test_package() -> None:
    assert sparta.eog.cli.main is not None
    assert sparta.eog.training.trainer.Trainer is not None
    assert sparta.eog.evaluation.sweep.run_sweep is not None
