"""Test the worker-pool helpers."""
import os
from unittest import TestCase
from unittest.mock import patch

from epiforge.utils import (
    THREADS_ENV,
    parallel_map,
    worker_count,
)


def square(x):
    return x * x


class TestWorkers(TestCase):
    def test_worker_count(self):
        with patch.dict(os.environ, {}, clear=False):
            os.environ.pop(THREADS_ENV, None)
            self.assertEqual(worker_count(), 1)
            self.assertEqual(worker_count(4), 4)
            self.assertEqual(worker_count(0), 1)

    def test_environment_cap(self):
        with patch.dict(os.environ, {THREADS_ENV: "2"}):
            self.assertEqual(worker_count(), 2)
            self.assertEqual(worker_count(8), 2)
            self.assertEqual(worker_count(1), 1)
        with patch.dict(os.environ, {THREADS_ENV: "many"}):
            with self.assertRaises(ValueError):
                worker_count()

    def test_parallel_map_keeps_order(self):
        items = list(range(7))
        expected = [x * x for x in items]
        self.assertEqual(parallel_map(square, items, workers=1), expected)
        self.assertEqual(parallel_map(square, items, workers=3), expected)
        self.assertEqual(parallel_map(square, [], workers=3), [])
