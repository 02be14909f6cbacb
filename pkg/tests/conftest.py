import pathlib
import sys

import pytest

from xaidroid.apigraph import ApiVocabulary

FIXTURES = pathlib.Path(__file__).parent / "fixtures"

SMS_APIS = (
    "Landroid/content/Intent;->getAction",
    "Landroid/content/Intent;->getExtras",
    "Landroid/os/Bundle;->get",
    "Landroid/telephony/SmsManager;->getDefault",
    "Landroid/telephony/SmsManager;->sendTextMessage",
    "Landroid/telephony/SmsMessage;->createFromPdu",
    "Landroid/telephony/SmsMessage;->getDisplayMessageBody",
    "Landroid/telephony/SmsMessage;->getDisplayOriginatingAddress",
    "Ljava/lang/Object;->toString",
    "Ljava/lang/String;->equals",
    "Ljava/lang/StringBuilder;-><init>",
    "Ljava/lang/StringBuilder;->append",
    "Ljava/lang/StringBuilder;->toString",
    "Ljava/util/ArrayList;-><init>",
    "Ljava/util/List;->add",
)


@pytest.fixture(scope="session")
def sms_text():
    return (FIXTURES / "sms_receiver.slst").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def sms_vocab():
    return ApiVocabulary(sorted(SMS_APIS))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for criterion, ok, detail in sorted(results):
        verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"  criterion {criterion}: {verdict} ({detail})")
