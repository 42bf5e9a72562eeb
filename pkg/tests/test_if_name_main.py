"""Test the if __name__ == "__main__" block of calabiflow.__main__."""

from unittest.mock import MagicMock, patch


class TestMainModule:
    """Test the __main__.py module."""

    def test_main_module(self) -> None:
        """Test the __main__.py module's entry point."""
        mock_main = MagicMock(return_value=3)

        with patch("calabiflow.main", mock_main):
            with patch("sys.exit") as mock_exit:
                with open("src/calabiflow/__main__.py", encoding="utf-8") as f:
                    exec(f.read(), {"__name__": "__main__"})

                mock_main.assert_called_once()
                mock_exit.assert_called_once_with(3)
